"""Rank-revealing helpers used for every span and dimension decision."""
from __future__ import annotations

import numpy as np


def orthonormal_columns(vectors, ambient_dim: int, eps_rank: float) -> np.ndarray:
    """Orthonormal basis (as columns) of the span of ``vectors``.

    ``vectors`` is anything reshapeable to (k, ambient_dim). Singular values
    at or below ``eps_rank * max(1, s_max)`` are treated as zero.
    """
    M = np.asarray(vectors, dtype=float).reshape(-1, ambient_dim)
    if M.shape[0] == 0:
        return np.zeros((ambient_dim, 0))
    U, s, _ = np.linalg.svd(M.T, full_matrices=False)
    if s.size == 0:
        return np.zeros((ambient_dim, 0))
    thr = eps_rank * max(1.0, s[0])
    r = int(np.sum(s > thr))
    return U[:, :r].copy()


def numerical_rank(M, eps_rank: float) -> int:
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > eps_rank * max(1.0, s[0])))


def null_space(M, eps_rank: float, expected: int | None = None):
    """Null space basis of ``M`` and the singular values used to decide it."""
    M = np.asarray(M)
    _, s, Vh = np.linalg.svd(M)
    n = M.shape[1]
    s_full = np.zeros(n)
    s_full[: s.size] = s
    thr = eps_rank * max(1.0, s_full[0] if n else 0.0)
    k = int(np.sum(s_full <= thr))
    if expected is not None:
        k_use = expected
    else:
        k_use = k
    basis = Vh[n - k_use:].conj().T if k_use else np.zeros((n, 0), dtype=M.dtype)
    return basis, k, s_full


def off_span_residual(Q: np.ndarray, v) -> np.ndarray:
    """Norm of the component of each column of ``v`` orthogonal to span(Q)."""
    v = np.asarray(v, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    if Q.shape[1] == 0:
        return np.linalg.norm(v, axis=0)
    return np.linalg.norm(v - Q @ (Q.T @ v), axis=0)
