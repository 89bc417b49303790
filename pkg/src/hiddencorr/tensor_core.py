"""Dense third-order tensors and the multilinear algebra built on them.

Tensors are plain ``numpy`` arrays of shape ``(I, J, K)``. Public functions
take 1-based mode numbers and indices, so ``mode=3, idx=1`` is the first
frontal slice ``X[:, :, 0]``.

Unfolding convention
--------------------
``unfold_n(X, n)`` places the mode-``n`` fibers as columns; the remaining
modes index the columns with the lower-numbered mode varying fastest. For a
3x4x2 tensor this gives ``X_(1)[i, j + 4*k] = X[i, j, k]``.

``unfold_general`` generalizes this: within the row set and within the column
set, the *first listed* mode varies fastest. ``unfold_general(X, (3, 1), (2,))``
therefore walks rows as ``(k=1,i=1), (k=2,i=1), (k=1,i=2), ...``.

Integer input arrays keep their integer dtype through unfolding, folding and
n-mode products, so small worked examples can be checked exactly.
"""

from __future__ import annotations

from typing import Sequence, Tuple

import numpy as np

__all__ = [
    "as_tensor3",
    "as_matrix",
    "slice_",
    "fiber",
    "unfold_n",
    "unfold_general",
    "fold_n",
    "fold_general",
    "nmode_product",
    "outer3",
    "frob_norm",
]

Dims = Tuple[int, int, int]


def _as_finite_array(x, ndim: int, what: str) -> np.ndarray:
    arr = np.asarray(x)
    if arr.dtype.kind == "b":
        arr = arr.astype(np.int64)
    if arr.dtype.kind not in "iuf":
        raise TypeError(f"{what} must be real-valued, got dtype {arr.dtype}")
    if arr.ndim != ndim:
        raise ValueError(f"{what} must have {ndim} dimensions, got shape {arr.shape}")
    if any(s < 1 for s in arr.shape):
        raise ValueError(f"{what} dimensions must be positive, got shape {arr.shape}")
    if arr.dtype.kind == "f" and not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contains NaN or Inf")
    return arr


def as_tensor3(x) -> np.ndarray:
    """Validate ``x`` as a finite, real, order-3 array and return it."""
    return _as_finite_array(x, 3, "tensor")


def as_matrix(x) -> np.ndarray:
    """Validate ``x`` as a finite, real 2-D array and return it."""
    return _as_finite_array(x, 2, "matrix")


def _check_mode(n) -> int:
    if n not in (1, 2, 3):
        raise ValueError(f"mode must be 1, 2 or 3, got {n!r}")
    return int(n)


def _check_index(idx, mode: int, limit: int) -> int:
    if not 1 <= idx <= limit:
        raise IndexError(f"index {idx} out of range for mode {mode} (valid 1..{limit})")
    return int(idx) - 1


def slice_(t, mode: int, idx: int) -> np.ndarray:
    """Return a slice of ``t`` with mode ``mode`` fixed at 1-based ``idx``.

    ``mode=1`` gives the horizontal slice (J x K), ``mode=2`` the lateral
    slice (I x K) and ``mode=3`` the frontal slice (I x J).
    """
    t = as_tensor3(t)
    mode = _check_mode(mode)
    i = _check_index(idx, mode, t.shape[mode - 1])
    return np.take(t, i, axis=mode - 1)


def fiber(t, mode: int, fixed: Sequence[int]) -> np.ndarray:
    """Return the mode-``mode`` fiber with the other two indices ``fixed``.

    ``fixed`` lists the 1-based indices of the two remaining modes in
    ascending mode order, e.g. ``fiber(X, 1, (j, k))`` is ``x[:, j, k]``.
    """
    t = as_tensor3(t)
    mode = _check_mode(mode)
    others = [m for m in (1, 2, 3) if m != mode]
    if len(fixed) != 2:
        raise ValueError("fixed must hold exactly two indices")
    index: list = [slice(None)] * 3
    for m, f in zip(others, fixed):
        index[m - 1] = _check_index(f, m, t.shape[m - 1])
    return t[tuple(index)]


def _check_partition(row_modes, col_modes) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    rows = tuple(int(m) for m in row_modes)
    cols = tuple(int(m) for m in col_modes)
    if not rows or not cols:
        raise ValueError("row and column mode sets must both be nonempty")
    if sorted(rows + cols) != [1, 2, 3]:
        raise ValueError(f"modes {rows} x {cols} do not partition {{1, 2, 3}}")
    return rows, cols


def unfold_general(t, row_modes: Sequence[int], col_modes: Sequence[int]) -> np.ndarray:
    """Matricize ``t`` with ``row_modes`` on the rows and ``col_modes`` on the columns."""
    t = as_tensor3(t)
    rows, cols = _check_partition(row_modes, col_modes)
    perm = [m - 1 for m in rows + cols]
    nrows = int(np.prod([t.shape[m - 1] for m in rows]))
    return np.reshape(np.transpose(t, perm), (nrows, -1), order="F")


def fold_general(m, row_modes: Sequence[int], col_modes: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`unfold_general`."""
    rows, cols = _check_partition(row_modes, col_modes)
    m = as_matrix(m)
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3 or any(d < 1 for d in dims):
        raise ValueError(f"dims must be three positive integers, got {dims}")
    order = rows + cols
    permuted = [dims[k - 1] for k in order]
    expected = (int(np.prod(permuted[: len(rows)])), int(np.prod(permuted[len(rows):])))
    if m.shape != expected:
        raise ValueError(f"matrix of shape {m.shape} cannot fold to {dims}; expected {expected}")
    arr = np.reshape(m, permuted, order="F")
    return np.transpose(arr, np.argsort([k - 1 for k in order]))


def _rest(n: int) -> Tuple[int, ...]:
    return tuple(m for m in (1, 2, 3) if m != n)


def unfold_n(t, n: int) -> np.ndarray:
    """Mode-``n`` matricization ``X_(n)`` of shape ``I_n x (prod of other dims)``."""
    n = _check_mode(n)
    return unfold_general(t, (n,), _rest(n))


def fold_n(m, n: int, dims: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`unfold_n`: rebuild a tensor of shape ``dims``."""
    n = _check_mode(n)
    return fold_general(m, (n,), _rest(n), dims)


def nmode_product(t, v, n: int) -> np.ndarray:
    """n-mode product ``t x_n v``.

    ``v`` has shape ``(J, I_n)``; the result replaces dimension ``I_n`` by
    ``J`` and satisfies ``unfold_n(result, n) == v @ unfold_n(t, n)``.
    """
    t = as_tensor3(t)
    v = as_matrix(v)
    n = _check_mode(n)
    if v.shape[1] != t.shape[n - 1]:
        raise ValueError(
            f"cannot multiply tensor of shape {t.shape} by matrix of shape {v.shape} "
            f"along mode {n}: matrix needs {t.shape[n - 1]} columns"
        )
    dims = list(t.shape)
    dims[n - 1] = v.shape[0]
    return fold_n(v @ unfold_n(t, n), n, dims)


def outer3(a, b, c) -> np.ndarray:
    """Outer product ``a o b o c`` with ``x[i, j, k] = a[i] * b[j] * c[k]``."""
    a, b, c = (np.asarray(v) for v in (a, b, c))
    for v in (a, b, c):
        if v.ndim != 1 or v.size == 0:
            raise ValueError("outer3 needs three nonempty vectors")
    return as_tensor3(np.einsum("i,j,k->ijk", a, b, c))


def frob_norm(t) -> float:
    """Frobenius norm of a tensor (or any array)."""
    arr = np.asarray(t, dtype=float)
    return float(np.sqrt(np.sum(arr * arr)))
