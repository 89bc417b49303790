"""Dense matrix kernels shared by the decompositions and the correlation code.

Eigen- and singular-value decompositions wrap LAPACK through ``numpy``; the
contracts (ordering, thin shapes, rank cutoffs) are fixed here so callers do
not depend on library defaults.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .tensor_core import as_matrix

__all__ = ["EigResult", "SvdResult", "sym_eig", "svd", "lstsq", "pinv", "khatri_rao"]

PINV_RCOND = 1e-12


class EigResult(NamedTuple):
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # orthonormal columns


class SvdResult(NamedTuple):
    U: np.ndarray
    S: np.ndarray  # descending, nonnegative
    V: np.ndarray


def sym_eig(m) -> EigResult:
    """Full eigendecomposition of a symmetric matrix, eigenvalues ascending.

    The input is symmetrized as ``(M + M.T) / 2`` before decomposition.
    """
    m = as_matrix(m).astype(float)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"sym_eig needs a square matrix, got shape {m.shape}")
    w, v = np.linalg.eigh(0.5 * (m + m.T))
    return EigResult(w, v)


def svd(m) -> SvdResult:
    """Thin SVD ``M = U @ diag(S) @ V.T``."""
    m = as_matrix(m).astype(float)
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    return SvdResult(u, s, vt.T)


def pinv(m, rcond: float = PINV_RCOND) -> np.ndarray:
    """Moore-Penrose pseudoinverse, dropping singular values below ``rcond * S_max``."""
    return _pinv(as_matrix(m).astype(float), rcond)


def _pinv(m: np.ndarray, rcond: float = PINV_RCOND) -> np.ndarray:
    # unchecked core of pinv for inner loops
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((m.shape[1], m.shape[0]))
    keep = s > rcond * s[0]
    return (vt[keep].T / s[keep]) @ u[:, keep].T


def lstsq(a, b) -> np.ndarray:
    """Minimum-norm least-squares solution ``X`` of ``a @ X ~= b``."""
    a = as_matrix(a).astype(float)
    b = np.asarray(b, dtype=float)
    vector = b.ndim == 1
    b = as_matrix(b[:, None] if vector else b)
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"lstsq shape mismatch: a is {a.shape}, b is {b.shape}")
    x = np.linalg.lstsq(a, b, rcond=None)[0]
    return x[:, 0] if vector else x


def khatri_rao(a, b) -> np.ndarray:
    """Columnwise Kronecker product; row ``i * rows(b) + j`` holds ``a[i] * b[j]``."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"khatri_rao needs equal column counts, got {a.shape} and {b.shape}")
    return (a[:, None, :] * b[None, :, :]).reshape(a.shape[0] * b.shape[0], a.shape[1])
