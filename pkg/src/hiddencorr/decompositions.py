"""PARAFAC, Tucker and slice-diagonal (SDT) models fitted by alternating least squares.

All three models share the same factor layout: ``A`` is ``I x P``, ``B`` is
``J x Q`` and ``C`` is ``K x R``. They differ in the core:

* PARAFAC: implicit superdiagonal core of ones, ``P = Q = R``.
* Tucker: dense ``P x Q x R`` core ``G``.
* SDT: every frontal slice of the core is diagonal, so the core is stored as
  the ``P x R`` matrix ``core_diag`` with ``core_diag[p, r] = lambda[p, p, r]``.

Writing ``W = C @ core_diag.T`` (``K x P``), an SDT model is a PARAFAC model
with factors ``(A, B, W)`` whose third factor has rank at most ``R``. Each ALS
sweep below solves one linear least-squares problem per block:

* ``A`` from ``X_(1) ~ A (W kr B)^T``, ``B`` from ``X_(2) ~ B (W kr A)^T``;
* ``C`` from ``X_(3) ~ C core_diag^T (B kr A)^T`` with the core fixed;
* ``core_diag`` from the same mode-3 relation with ``A, B, C`` fixed. The
  vectorized problem has a Kronecker-structured design matrix, whose
  pseudoinverse factorizes, so it is solved as ``pinv(C) X_(3) pinv((B kr A)^T)``.

Here ``kr`` is the Khatri-Rao product (see :func:`hiddencorr.linalg.khatri_rao`).
Normal equations use Hadamard products of Gram matrices and the
pseudoinverse, which gives the same minimum-norm solution as a dense solve.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .complexity import count_free_params, normalize_ranks
from .linalg import _pinv, pinv
from .tensor_core import as_matrix, as_tensor3, frob_norm, unfold_n

log = logging.getLogger(__name__)

__all__ = [
    "ParafacModel",
    "TuckerModel",
    "SdtModel",
    "AlsConfig",
    "FitReport",
    "fit_parafac",
    "fit_tucker",
    "fit_sdt",
    "fit",
    "reconstruct",
    "embed_parafac_as_sdt",
    "tucker_core_from_factors",
    "model_kind",
]


def _factor(x) -> np.ndarray:
    return np.array(as_matrix(x), dtype=float)


@dataclass(frozen=True)
class ParafacModel:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        for name in "ABC":
            object.__setattr__(self, name, _factor(getattr(self, name)))
        if not self.A.shape[1] == self.B.shape[1] == self.C.shape[1]:
            raise ValueError(
                f"PARAFAC factors need equal column counts, got "
                f"{self.A.shape}, {self.B.shape}, {self.C.shape}"
            )

    @property
    def rank(self) -> int:
        return self.A.shape[1]

    @property
    def ranks(self) -> Tuple[int]:
        return (self.rank,)

    @property
    def shape(self) -> Tuple[int, int, int]:
        return (self.A.shape[0], self.B.shape[0], self.C.shape[0])


@dataclass(frozen=True)
class TuckerModel:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    core: np.ndarray

    def __post_init__(self):
        for name in "ABC":
            object.__setattr__(self, name, _factor(getattr(self, name)))
        object.__setattr__(self, "core", np.array(as_tensor3(self.core), dtype=float))
        expected = (self.A.shape[1], self.B.shape[1], self.C.shape[1])
        if self.core.shape != expected:
            raise ValueError(f"core shape {self.core.shape} does not match factor ranks {expected}")

    @property
    def ranks(self) -> Tuple[int, int, int]:
        return self.core.shape

    @property
    def shape(self) -> Tuple[int, int, int]:
        return (self.A.shape[0], self.B.shape[0], self.C.shape[0])


@dataclass(frozen=True)
class SdtModel:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    core_diag: np.ndarray

    def __post_init__(self):
        for name in "ABC":
            object.__setattr__(self, name, _factor(getattr(self, name)))
        object.__setattr__(self, "core_diag", _factor(self.core_diag))
        p, q, r = self.A.shape[1], self.B.shape[1], self.C.shape[1]
        if p != q:
            raise ValueError(f"SDT needs P == Q, got P={p}, Q={q}")
        if self.core_diag.shape != (p, r):
            raise ValueError(f"core_diag must be {p} x {r}, got {self.core_diag.shape}")

    @property
    def ranks(self) -> Tuple[int, int, int]:
        p, r = self.core_diag.shape
        return (p, p, r)

    @property
    def shape(self) -> Tuple[int, int, int]:
        return (self.A.shape[0], self.B.shape[0], self.C.shape[0])

    def core(self) -> np.ndarray:
        """Dense ``P x P x R`` core with diagonal frontal slices."""
        p, r = self.core_diag.shape
        g = np.zeros((p, p, r))
        idx = np.arange(p)
        g[idx, idx, :] = self.core_diag
        return g


Model = Union[ParafacModel, TuckerModel, SdtModel]


def model_kind(model: Model) -> str:
    if isinstance(model, ParafacModel):
        return "parafac"
    if isinstance(model, TuckerModel):
        return "tucker"
    if isinstance(model, SdtModel):
        return "sdt"
    raise TypeError(f"not a decomposition model: {type(model).__name__}")


@dataclass(frozen=True)
class AlsConfig:
    """Stopping rule and initialization for ALS fits.

    A fit stops when the relative error ``eps`` changes by less than ``tol``
    between sweeps, when ``eps < tol``, or after ``max_iter`` sweeps. ``init``
    is ``"random"`` (i.i.d. standard normal factors) or ``"svd"`` (leading
    singular vectors of each unfolding); ``None`` picks ``"svd"`` for Tucker
    and ``"random"`` otherwise. Restart ``i`` draws from
    ``numpy.random.SeedSequence(seed, spawn_key=(i,))`` (PCG64).

    With ``line_search`` PARAFAC and SDT sweeps are followed by an
    extrapolation step ``old + s (new - old)`` with ``s = iteration^(1/3)``,
    kept only when it lowers the SSR. This shortens the long plateaus plain
    ALS is known for and keeps the error sequence non-increasing.
    """

    max_iter: int = 500
    tol: float = 1e-8
    restarts: int = 5
    seed: int = 0
    init: Optional[str] = None
    line_search: bool = True

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be > 0")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.init not in (None, "random", "svd"):
            raise ValueError(f"init must be 'random' or 'svd', got {self.init!r}")


@dataclass(frozen=True)
class FitReport:
    ssr: float
    rel_error: float
    iterations: int
    converged: bool
    free_params: int
    history: Tuple[float, ...] = field(default=(), repr=False)
    restart: int = 0
    degenerate: bool = False


def reconstruct(model: Model) -> np.ndarray:
    """Dense tensor represented by ``model``."""
    if isinstance(model, ParafacModel):
        return np.einsum("ir,jr,kr->ijk", model.A, model.B, model.C, optimize=True)
    if isinstance(model, SdtModel):
        w = model.C @ model.core_diag.T
        return np.einsum("ip,jp,kp->ijk", model.A, model.B, w, optimize=True)
    if isinstance(model, TuckerModel):
        return np.einsum("pqr,ip,jq,kr->ijk", model.core, model.A, model.B, model.C, optimize=True)
    raise TypeError(f"not a decomposition model: {type(model).__name__}")


def embed_parafac_as_sdt(m: ParafacModel) -> SdtModel:
    """Write a rank-R PARAFAC model as an SDT model with ``P = R`` and identity core."""
    return SdtModel(m.A.copy(), m.B.copy(), m.C.copy(), np.eye(m.rank))


def tucker_core_from_factors(t, a, b, c) -> np.ndarray:
    """Least-squares core ``G`` minimizing ``||t - G x1 a x2 b x3 c||_F``.

    The design matrix is a Kronecker product, so ``G = t x1 pinv(a) x2
    pinv(b) x3 pinv(c)``.
    """
    t = as_tensor3(t).astype(float)
    a, b, c = (as_matrix(m).astype(float) for m in (a, b, c))
    if (a.shape[0], b.shape[0], c.shape[0]) != t.shape:
        raise ValueError(
            f"factor rows {(a.shape[0], b.shape[0], c.shape[0])} do not match tensor {t.shape}"
        )
    return np.einsum("ijk,pi,qj,rk->pqr", t, pinv(a), pinv(b), pinv(c), optimize=True)


# --- ALS machinery -----------------------------------------------------------


_SMALL = 20000


def _mttkrp(x: np.ndarray, u: np.ndarray, v: np.ndarray, mode: int) -> np.ndarray:
    # X_(n) @ khatri_rao(v, u); small tensors use the explicit product, large
    # ones a contraction that never forms it
    if x.size <= _SMALL:
        xn = np.moveaxis(x, mode - 1, 0).reshape(x.shape[mode - 1], -1, order="F")
        return xn @ (v[:, None, :] * u[None, :, :]).reshape(-1, u.shape[1])
    if mode == 1:
        return np.einsum("ijk,jr,kr->ir", x, u, v, optimize=True)
    if mode == 2:
        return np.einsum("ijk,ir,kr->jr", x, u, v, optimize=True)
    return np.einsum("ijk,ir,jr->kr", x, u, v, optimize=True)


def _ssr(x: np.ndarray, model: Model) -> float:
    d = x - reconstruct(model)
    return float(np.vdot(d, d))


def _gram_ssr(x, norm_x2: float, inner: float, fit_norm2: float, model) -> float:
    # ||X||^2 - 2<X, Xhat> + ||Xhat||^2 loses digits to cancellation once the
    # residual is tiny, so small values are recomputed from the residual tensor.
    ssr = norm_x2 - 2.0 * inner + fit_norm2
    if ssr < 1e-6 * norm_x2:
        return _ssr(x, model())
    return float(ssr)


def _extrapolate(it: int, old, new, ssr: float, score):
    # accept old + s (new - old) only if it improves on the plain ALS step
    if old is None or it < 2:
        return new, ssr
    step = it ** (1.0 / 3.0)
    cand = tuple(o + step * (n - o) for o, n in zip(old, new))
    s = score(*cand)
    if s < ssr:
        return cand, s
    return new, ssr


def _col_norms(m: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(m, axis=0)
    return np.where(n > 0, n, 1.0)


def _leading_left(m: np.ndarray, k: int) -> np.ndarray:
    if k <= min(m.shape):
        u = np.linalg.svd(m, full_matrices=False)[0]
    else:
        u = np.linalg.svd(m, full_matrices=True)[0]
    return u[:, :k]


class _Tracker:
    """Applies the stopping rule and keeps the eps history of one run."""

    def __init__(self, norm_x: float, cfg: AlsConfig):
        self.norm_x = norm_x
        self.cfg = cfg
        self.history: list = []
        self.ssr = np.inf

    def update(self, ssr: float) -> bool:
        self.ssr = ssr
        eps = np.sqrt(max(ssr, 0.0)) / self.norm_x
        prev = self.history[-1] if self.history else None
        self.history.append(float(eps))
        return eps < self.cfg.tol or (prev is not None and abs(prev - eps) < self.cfg.tol)


def _run_restarts(x, cfg: AlsConfig, kind: str, ranks, one_run, init_model, deterministic: bool):
    x = np.asarray(as_tensor3(x), dtype=float)
    w = count_free_params(kind, x.shape, ranks)
    norm_x = frob_norm(x)
    if norm_x == 0.0:
        log.warning("all-zero tensor: returning zero factors")
        model = one_run(x, None, None, zero=True)
        return model, FitReport(0.0, 0.0, 0, True, w, (), 0, True)

    n_runs = 1 if (init_model is not None or deterministic) else cfg.restarts
    best = None
    for i in range(n_runs):
        # spawn keys keep restart streams apart from default_rng(seed) itself
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(i,)))
        tracker = _Tracker(norm_x, cfg)
        model, converged = one_run(x, rng, tracker, init_model=init_model)
        report = FitReport(
            ssr=tracker.ssr,
            rel_error=tracker.history[-1],
            iterations=len(tracker.history),
            converged=converged,
            free_params=w,
            history=tuple(tracker.history),
            restart=i,
        )
        if best is None or report.ssr < best[1].ssr:
            best = (model, report)
    return best


def _check_dims(x_shape, ranks, kind):
    i, j, k = x_shape
    if kind == "parafac":
        return
    p, q, r = ranks
    if p > i or q > j or r > k:
        raise ValueError(f"{kind} ranks {ranks} exceed tensor dimensions {x_shape}")


def fit_parafac(t, r: int, cfg: AlsConfig = AlsConfig(), init: Optional[ParafacModel] = None):
    """Fit a rank-``r`` PARAFAC model by ALS.

    Returns ``(model, report)`` for the restart with the smallest SSR. On
    return, columns of ``A`` and ``B`` carry equal shares of each component's
    scale and columns of ``C`` have unit norm and a nonnegative sum.
    """
    (rank,) = normalize_ranks("parafac", r)
    t = as_tensor3(t)
    if init is not None and init.shape != t.shape:
        raise ValueError(f"initial model shape {init.shape} does not match tensor {t.shape}")

    def one_run(x, rng, tracker, init_model=None, zero=False):
        i, j, k = x.shape
        if zero:
            return ParafacModel(np.zeros((i, rank)), np.zeros((j, rank)), np.zeros((k, rank)))
        if init_model is not None:
            a, b, c = init_model.A.copy(), init_model.B.copy(), init_model.C.copy()
        elif (cfg.init or "random") == "svd":
            a = _leading_left(unfold_n(x, 1), rank)
            b = _leading_left(unfold_n(x, 2), rank)
            c = _leading_left(unfold_n(x, 3), rank)
        else:
            a, b, c = rng.standard_normal((i, rank)), rng.standard_normal((j, rank)), rng.standard_normal((k, rank))
        converged = False
        norm_x2 = float(np.vdot(x, x))

        def score(a, b, c):
            m3 = _mttkrp(x, a, b, 3)
            gab = (a.T @ a) * (b.T @ b)
            return _gram_ssr(x, norm_x2, np.vdot(m3, c), np.sum(gab * (c.T @ c)), lambda: ParafacModel(a, b, c))

        prev = None
        for it in range(1, cfg.max_iter + 1):
            a = _mttkrp(x, b, c, 1) @ _pinv((b.T @ b) * (c.T @ c))
            b = _mttkrp(x, a, c, 2) @ _pinv((a.T @ a) * (c.T @ c))
            m3 = _mttkrp(x, a, b, 3)
            gab = (a.T @ a) * (b.T @ b)
            c = m3 @ _pinv(gab)
            ssr = _gram_ssr(x, norm_x2, np.vdot(m3, c), np.sum(gab * (c.T @ c)), lambda: ParafacModel(a, b, c))
            na, nb = _col_norms(a), _col_norms(b)
            a, b, c = a / na, b / nb, c * (na * nb)
            if cfg.line_search:
                (a, b, c), ssr = _extrapolate(it, prev, (a, b, c), ssr, score)
                na, nb = _col_norms(a), _col_norms(b)
                a, b, c = a / na, b / nb, c * (na * nb)
                prev = (a, b, c)
            if tracker.update(ssr):
                converged = True
                break
        return _canonical_parafac(a, b, c), converged

    return _run_restarts(t, cfg, "parafac", (rank,), one_run, init, deterministic=(cfg.init == "svd"))


def _canonical_parafac(a, b, c) -> ParafacModel:
    nc = np.linalg.norm(c, axis=0)
    sign = np.where(c.sum(axis=0) < 0, -1.0, 1.0)
    scale = np.where(nc > 0, nc, 1.0)
    c = c * sign / scale
    share = np.sqrt(np.where(nc > 0, nc, 1.0))
    return ParafacModel(a * share * sign, b * share, c)


def _diagonalize_slice(a, b, core2d):
    """Rotate ``a`` and ``b`` so that ``a @ core2d @ b.T`` has a diagonal core.

    The product is unchanged: the new factors hold its leading singular
    vectors and the new core its singular values. With a single time
    component this removes the rotational freedom of Tucker and SDT models,
    so individual static components become well defined. Signs are fixed so
    that each column of ``a`` sums to a nonnegative value and ``a_p . b_p >= 0``;
    a negative singular direction keeps its sign in the core.
    """
    qa, ra = np.linalg.qr(a)
    qb, rb = np.linalg.qr(b)
    u, s, vt = np.linalg.svd(ra @ core2d @ rb.T)
    a2, b2 = qa @ u, qb @ vt.T
    k = s.size
    flip_a = np.where(a2[:, :k].sum(axis=0) < 0, -1.0, 1.0)
    a2[:, :k] *= flip_a
    b2[:, :k] *= flip_a
    flip_b = np.ones(k)
    if a2.shape[0] == b2.shape[0]:
        flip_b = np.where(np.sum(a2[:, :k] * b2[:, :k], axis=0) < 0, -1.0, 1.0)
        b2[:, :k] *= flip_b
    core = np.zeros_like(core2d, dtype=float)
    core[np.arange(k), np.arange(k)] = s * flip_b
    return a2, b2, core


def fit_tucker(t, ranks: Sequence[int], cfg: AlsConfig = AlsConfig(), init: Optional[TuckerModel] = None):
    """Fit a Tucker model with orthonormal factors by higher-order orthogonal iteration.

    Each sweep replaces one factor by the leading left singular vectors of
    the tensor projected on the other two factors, then recomputes the core
    as ``t x1 A^T x2 B^T x3 C^T``. The default ``"svd"`` initialization is the
    truncated HOSVD and is deterministic, so only one run is made. With
    ``R = 1`` the factors are rotated so that the single core slice is
    diagonal with decreasing weights.
    """
    p, q, r = normalize_ranks("tucker", ranks)
    t = as_tensor3(t)
    _check_dims(t.shape, (p, q, r), "tucker")
    mode = cfg.init or "svd"

    def one_run(x, rng, tracker, init_model=None, zero=False):
        i, j, k = x.shape
        if zero:
            eye = [np.eye(n, m) for n, m in ((i, p), (j, q), (k, r))]
            return TuckerModel(*eye, np.zeros((p, q, r)))
        if init_model is not None:
            a, b, c = (np.linalg.qr(m)[0] for m in (init_model.A, init_model.B, init_model.C))
        elif mode == "svd":
            a = _leading_left(unfold_n(x, 1), p)
            b = _leading_left(unfold_n(x, 2), q)
            c = _leading_left(unfold_n(x, 3), r)
        else:
            a, b, c = (np.linalg.qr(rng.standard_normal((n, m)))[0] for n, m in ((i, p), (j, q), (k, r)))
        converged = False
        norm_x2 = float(np.vdot(x, x))
        g = None
        for _ in range(cfg.max_iter):
            y = np.einsum("ijk,jq,kr->iqr", x, b, c, optimize=True)
            a = _leading_left(y.reshape(i, -1), p)
            y = np.einsum("ijk,ip,kr->jpr", x, a, c, optimize=True)
            b = _leading_left(y.reshape(j, -1), q)
            y = np.einsum("ijk,ip,jq->kpq", x, a, b, optimize=True)
            c = _leading_left(y.reshape(k, -1), r)
            g = np.einsum("kpq,kr->pqr", y, c, optimize=True)
            g2 = float(np.vdot(g, g))
            if tracker.update(_gram_ssr(x, norm_x2, g2, g2, lambda: TuckerModel(a, b, c, g))):
                converged = True
                break
        sign = np.where(c.sum(axis=0) < 0, -1.0, 1.0)
        c, g = c * sign, g * sign
        if r == 1:
            a, b, g2 = _diagonalize_slice(a, b, g[:, :, 0])
            g = g2[:, :, None]
        return TuckerModel(a, b, c, g), converged

    return _run_restarts(t, cfg, "tucker", (p, q, r), one_run, init, deterministic=(mode == "svd"))


def fit_sdt(t, ranks: Sequence[int], cfg: AlsConfig = AlsConfig(), init: Optional[SdtModel] = None):
    """Fit a slice-diagonal (SDT) model with ``ranks = (P, R)`` or ``(P, P, R)``.

    On return the columns of ``A``, ``B`` and ``C`` have unit norm, all scale
    sits in ``core_diag``, and each column of ``C`` has a nonnegative sum.
    With ``R = 1`` the model only determines ``A diag(core_diag) B^T``, so
    ``A`` and ``B`` are rotated to its singular vectors (orthonormal columns,
    ordered by decreasing weight).
    """
    p, _, r = normalize_ranks("sdt", ranks)
    t = as_tensor3(t)
    _check_dims(t.shape, (p, p, r), "sdt")
    if init is not None and (init.shape != t.shape or init.ranks != (p, p, r)):
        raise ValueError("initial model does not match tensor shape and ranks")

    def one_run(x, rng, tracker, init_model=None, zero=False):
        i, j, k = x.shape
        if zero:
            return SdtModel(np.zeros((i, p)), np.zeros((j, p)), np.zeros((k, r)), np.zeros((p, r)))
        if init_model is not None:
            a, b, c, lam = (init_model.A.copy(), init_model.B.copy(), init_model.C.copy(),
                            init_model.core_diag.copy())
        elif (cfg.init or "random") == "svd":
            a = _leading_left(unfold_n(x, 1), p)
            b = _leading_left(unfold_n(x, 2), p)
            c = _leading_left(unfold_n(x, 3), r)
            g = (a.T @ a) * (b.T @ b)
            lam = (_pinv(c) @ _mttkrp(x, a, b, 3) @ _pinv(g)).T
        else:
            a, b, c = rng.standard_normal((i, p)), rng.standard_normal((j, p)), rng.standard_normal((k, r))
            lam = rng.standard_normal((p, r))
        converged = False
        norm_x2 = float(np.vdot(x, x))

        def score(a, b, c, lam):
            w = c @ lam.T
            m3 = _mttkrp(x, a, b, 3)
            g = (a.T @ a) * (b.T @ b)
            return _gram_ssr(x, norm_x2, np.vdot(m3, w), np.sum(g * (w.T @ w)), lambda: SdtModel(a, b, c, lam))

        prev = None
        for it in range(1, cfg.max_iter + 1):
            w = c @ lam.T
            a = _mttkrp(x, b, w, 1) @ _pinv((b.T @ b) * (w.T @ w))
            b = _mttkrp(x, a, w, 2) @ _pinv((a.T @ a) * (w.T @ w))
            m3 = _mttkrp(x, a, b, 3)
            g = (a.T @ a) * (b.T @ b)
            c = m3 @ lam @ _pinv(lam.T @ g @ lam)
            lam = (_pinv(c) @ m3 @ _pinv(g)).T
            w = c @ lam.T
            ssr = _gram_ssr(x, norm_x2, np.vdot(m3, w), np.sum(g * (w.T @ w)), lambda: SdtModel(a, b, c, lam))
            na, nb, nc = _col_norms(a), _col_norms(b), _col_norms(c)
            a, b, c = a / na, b / nb, c / nc
            lam = lam * (na * nb)[:, None] * nc[None, :]
            if cfg.line_search:
                (a, b, c, lam), ssr = _extrapolate(it, prev, (a, b, c, lam), ssr, score)
                na, nb, nc = _col_norms(a), _col_norms(b), _col_norms(c)
                a, b, c = a / na, b / nb, c / nc
                lam = lam * (na * nb)[:, None] * nc[None, :]
                prev = (a, b, c, lam)
            if tracker.update(ssr):
                converged = True
                break
        sign = np.where(c.sum(axis=0) < 0, -1.0, 1.0)
        c, lam = c * sign, lam * sign
        if r == 1:
            a, b, core = _diagonalize_slice(a, b, np.diag(lam[:, 0]))
            lam = np.diag(core)[:, None].copy()
        return SdtModel(a, b, c, lam), converged

    return _run_restarts(t, cfg, "sdt", (p, p, r), one_run, init, deterministic=(cfg.init == "svd"))


def fit(t, kind: str, ranks, cfg: AlsConfig = AlsConfig(), init=None):
    """Dispatch to :func:`fit_parafac`, :func:`fit_tucker` or :func:`fit_sdt`."""
    kind = str(kind).lower()
    if kind == "parafac":
        return fit_parafac(t, ranks, cfg, init)
    if kind == "tucker":
        return fit_tucker(t, ranks, cfg, init)
    if kind == "sdt":
        return fit_sdt(t, ranks, cfg, init)
    raise ValueError(f"unknown model kind {kind!r}")


def with_factors(model: Model, **changes) -> Model:
    """Copy of ``model`` with some fields replaced (validation re-runs)."""
    return replace(model, **changes)
