"""Synthetic instances used by tests, the CLI and benchmarks."""

from __future__ import annotations

import numpy as np

from .. import _rng


def low_rank_plus_noise(n: int, d: int, rank: int, noise: float = 0.5, seed: int = 0) -> np.ndarray:
    """Rank-``rank`` signal with entries of order 1 plus Gaussian noise."""
    rng = _rng.stream(seed, "data")
    signal = rng.standard_normal((n, rank)) @ rng.standard_normal((rank, d))
    return signal + noise * rng.standard_normal((n, d))


def planted_clusters(n: int, d: int, k: int, spread: float = 4.0, seed: int = 0) -> np.ndarray:
    """``k`` Gaussian blobs with unit variance around means of scale ``spread``."""
    rng = _rng.stream(seed, "data")
    means = spread * rng.standard_normal((k, d))
    labels = rng.integers(0, k, n)
    return means[labels] + rng.standard_normal((n, d))


def gaussian_points(n: int, d: int, seed: int = 0) -> np.ndarray:
    rng = _rng.stream(seed, "data")
    return rng.standard_normal((n, d))


def decaying_spectrum(n: int, d: int, decay: float = 0.35, seed: int = 0) -> np.ndarray:
    """Gaussian rows shaped so direction ``j`` (in a random basis) has scale ``decay^j``."""
    rng = _rng.stream(seed, "data")
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    return (rng.standard_normal((n, d)) * decay ** np.arange(d)) @ Q.T
