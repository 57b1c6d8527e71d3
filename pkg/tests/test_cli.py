import json

import numpy as np
import pytest

from strongcoreset.cli import main, parse_config
from strongcoreset.containers import read_container
from strongcoreset.ingest import write_dense_csv, write_sparse_triplets
from strongcoreset.oracle_harness import low_rank_plus_noise, planted_clusters


@pytest.fixture
def data(tmp_path):
    a = tmp_path / "a.csv"
    write_dense_csv(a, low_rank_plus_noise(150, 12, 2, 0.4, seed=3))
    c = tmp_path / "c.csv"
    write_dense_csv(c, planted_clusters(150, 6, 2, seed=3))
    return tmp_path, a, c


def run(argv, capsys):
    code = main([str(x) for x in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_verify_claims_report(capsys):
    code, out, _ = run(["verify", "--suite", "claims", "--samples", "2000", "--seed", "7"], capsys)
    doc = json.loads(out)
    assert code == 0
    assert doc["schema"] == "strongcoreset.report/1"
    assert doc["result"]["total_violations"] == 0 and doc["result"]["passed"]


def test_reduce_rank_k_tail_zero(tmp_path, capsys):
    rng = np.random.default_rng(0)
    f = tmp_path / "r.csv"
    write_dense_csv(f, rng.standard_normal((40, 2)) @ rng.standard_normal((2, 8)))
    out = tmp_path / "b.bin"
    code, _, err = run(["reduce", "--input", f, "--k", 2, "--epsilon", 0.5, "--output", out], capsys)
    assert code == 0, err
    c = read_container(out)
    assert c.type == "augmented" and np.all(c.arrays["tail"] <= 1e-8)
    assert c.meta["config"]["command"] == "reduce"


@pytest.mark.parametrize("cmd,which", [("coreset-subspace", 1), ("coreset-kmedian", 2)])
@pytest.mark.parametrize("encoding", ["binary", "text"])
def test_artifacts_identical_across_threads_and_replay(data, capsys, cmd, which, encoding):
    tmp, a, c = data
    inp = (a, c)[which - 1]
    outs = []
    for threads in (1, 0):
        out = tmp / f"{cmd}-{threads}.{encoding}"
        code, _, err = run([cmd, "--input", inp, "--k", 2, "--epsilon", 0.5, "--seed", 5,
                            "--threads", threads, "--encoding", encoding, "--output", out], capsys)
        assert code == 0, err
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    rep = tmp / "replay.out"
    code, _, err = run(["replay", "--input", tmp / f"{cmd}-1.{encoding}", "--output", rep], capsys)
    assert code == 0, err
    assert rep.read_bytes() == outs[0]


def test_sparse_input_and_eval(tmp_path, capsys):
    rng = np.random.default_rng(1)
    X = rng.standard_normal((100, 40)) * (rng.random((100, 40)) < 0.1)
    f = tmp_path / "s.txt"
    write_sparse_triplets(f, X)
    out = tmp_path / "core.bin"
    code, _, err = run(["coreset-subspace", "--input", f, "--format", "sparse_triplets", "--k", 2,
                        "--epsilon", 0.5, "--output", out], capsys)
    assert code == 0, err
    q = tmp_path / "q.json"
    q.write_text(json.dumps({"subspaces": [np.eye(40)[:, :2].tolist()]}))
    code, outtxt, err = run(["eval", "--input", out, "--queries", q], capsys)
    assert code == 0, err
    costs = json.loads(outtxt)["result"]["costs"]
    truth = np.sum(np.linalg.norm(X[:, 2:], axis=1))
    assert abs(costs[0] - truth) <= 0.5 * truth


def test_counterexample_command(capsys):
    code, out, _ = run(["counterexample", "--n", 1000, "--d", 200, "--ell", 5], capsys)
    r = json.loads(out)["result"]
    assert code == 0 and 1.3 <= r["naive_ratio"] <= 1.5


def test_errors_are_json(tmp_path, capsys):
    code, _, err = run(["coreset-subspace", "--input", tmp_path / "missing.csv"], capsys)
    assert code == 1 and json.loads(err)["error"]["type"] == "FileNotFoundError"
    code, _, err = run(["coreset-subspace", "--epsilon", 3], capsys)
    assert code == 2 and "epsilon" in json.loads(err)["error"]["message"]
    code, _, err = run(["no-such-command"], capsys)
    assert code == 2 and json.loads(err)["schema"] == "strongcoreset.error/1"
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3,oops\n")
    code, _, err = run(["coreset-kmedian", "--input", bad], capsys)
    assert code == 1 and json.loads(err)["error"]["line"] == 2


def test_env_overrides(monkeypatch):
    monkeypatch.setenv("STRONGCORESET_EPSILON", "0.125")
    monkeypatch.setenv("STRONGCORESET_K", "4")
    cfg = parse_config(["coreset-subspace"])
    assert cfg.epsilon == 0.125 and cfg.k == 4
    assert parse_config(["coreset-subspace", "--k", "2"]).k == 2


def test_constants_file(tmp_path, data, capsys):
    tmp, a, _ = data
    consts = tmp / "c.json"
    consts.write_text(json.dumps({"subspace_size_c": 0.05}))
    out = tmp / "o.bin"
    code, _, err = run(["coreset-subspace", "--input", a, "--k", 2, "--epsilon", 0.5,
                        "--constants", consts, "--output", out], capsys)
    assert code == 0, err
    meta = read_container(out).meta
    assert meta["config"]["constants"]["subspace_size_c"] == 0.05
    bad = tmp / "bad.json"
    bad.write_text(json.dumps({"nope": 1}))
    code, _, _ = run(["coreset-subspace", "--input", a, "--constants", bad], capsys)
    assert code == 2


def test_bench_prints_table(capsys):
    code, out, _ = run(["bench"], capsys)
    assert code == 0 and "coreset-kmedian" in out
