"""Shared dense/sparse linear algebra: truncated SVD, power iteration, PCA.

Matrices up to min(N, V) <= DENSE_CUTOFF take the exact dense SVD path;
larger ones use randomized subspace iteration with power steps, which is
accurate enough for retrieval at desk scale.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

DENSE_CUTOFF = 500
DEFAULT_POWER_ITERS = 4
DEFAULT_OVERSAMPLE = 10


def _as_linear_operator(m):
    if sp.issparse(m):
        return m.tocsr()
    return np.asarray(m, dtype=np.float64)


def truncated_svd(
    m,
    rank: int,
    n_power: int = DEFAULT_POWER_ITERS,
    oversample: int = DEFAULT_OVERSAMPLE,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rank-`rank` SVD of `m` (dense array or scipy sparse).

    Returns (U, s, Vt) with singular values descending. Exact for small
    matrices; randomized subspace iteration otherwise.
    """
    n_rows, n_cols = m.shape
    if rank < 1 or rank > min(n_rows, n_cols):
        raise ValueError(f"rank {rank} not in [1, {min(n_rows, n_cols)}]")
    if min(n_rows, n_cols) <= DENSE_CUTOFF:
        dense = m.toarray() if sp.issparse(m) else np.asarray(m, dtype=np.float64)
        u, s, vt = np.linalg.svd(dense, full_matrices=False)
        return u[:, :rank], s[:rank], vt[:rank, :]
    return _randomized_svd(_as_linear_operator(m), rank, n_power, oversample, seed)


def _randomized_svd(m, rank, n_power, oversample, seed):
    rng = np.random.default_rng(seed)
    k = min(rank + oversample, min(m.shape))
    omega = rng.standard_normal((m.shape[1], k))
    y = m @ omega
    q, _ = np.linalg.qr(y)
    for _ in range(n_power):
        z = m.T @ q
        q, _ = np.linalg.qr(z)
        y = m @ q
        q, _ = np.linalg.qr(y)
    b = q.T @ m
    b = np.asarray(b.todense()) if sp.issparse(b) else np.asarray(b)
    u_small, s, vt = np.linalg.svd(b, full_matrices=False)
    u = q @ u_small
    return u[:, :rank], s[:rank], vt[:rank, :]


def power_iteration_lambda_max(a: np.ndarray, steps: int = 100) -> float:
    """Dominant-eigenvalue magnitude of |a| via power iteration.

    Starts from the all-ones vector, which always overlaps the Perron
    vector of a non-negative matrix. Returns 0.0 for the zero matrix.
    """
    a = np.abs(np.asarray(a, dtype=np.float64))
    n = a.shape[0]
    if n == 0 or not a.any():
        return 0.0
    v = np.full(n, 1.0 / np.sqrt(n))
    lam = 0.0
    for _ in range(steps):
        w = a @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        lam = norm
        v = w / norm
    return float(lam)


def pca_fit(x: np.ndarray, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Column mean and top-`dim` principal axes (rows of the returned array)."""
    x = np.asarray(x, dtype=np.float64)
    mean = x.mean(axis=0)
    centered = x - mean
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    return mean, vt[:dim, :]


def pca_project(x: np.ndarray, dim: int) -> np.ndarray:
    """Scores of `x` on its top-`dim` principal components."""
    x = np.asarray(x, dtype=np.float64)
    dim = min(dim, min(x.shape))
    mean, components = pca_fit(x, dim)
    return (x - mean) @ components.T
