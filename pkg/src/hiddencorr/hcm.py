"""Hidden correlation matrix: link matrix, normalization and PSD projection.

The pipeline turns an ``M x M x T`` covariance tensor into an ``M x M``
correlation matrix:

1. choose ranks (:func:`hiddencorr.model_selection.scan_ranks`) and fit;
2. optionally drop the market mode (:func:`remove_market_mode`);
3. combine the static factors into the link matrix ``A L B^T``;
4. rescale to unit diagonal (:func:`normalize_to_correlation`);
5. project onto the correlation matrices (:func:`nearest_correlation`).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .decompositions import (
    AlsConfig,
    FitReport,
    ParafacModel,
    SdtModel,
    TuckerModel,
    model_kind,
)
from .linalg import sym_eig
from .tensor_core import as_matrix, as_tensor3

log = logging.getLogger(__name__)

__all__ = [
    "NearestCorrelationError",
    "PipelineError",
    "HcmResult",
    "is_correlation_matrix",
    "check_correlation_matrix",
    "link_matrix",
    "normalize_to_correlation",
    "nearest_correlation",
    "remove_market_mode",
    "build_hcm",
    "hcm_from_scan",
]

PSD_TOL = 1e-8


class NearestCorrelationError(RuntimeError):
    """Alternating projections did not converge; carries the last iterate."""

    def __init__(self, message: str, last_iterate: np.ndarray, residual: float):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual


class PipelineError(RuntimeError):
    """A stage of :func:`build_hcm` failed; ``stage`` names it."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


def is_correlation_matrix(m, tol: float = PSD_TOL) -> bool:
    """True if ``m`` is symmetric, unit-diagonal, bounded and PSD within ``tol``."""
    try:
        check_correlation_matrix(m, tol)
    except ValueError:
        return False
    return True


def check_correlation_matrix(m, tol: float = PSD_TOL) -> np.ndarray:
    """Return ``m`` if it is a valid correlation matrix, else raise ``ValueError``."""
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"correlation matrix must be square, got {m.shape}")
    if not np.array_equal(m, m.T):
        raise ValueError("correlation matrix is not exactly symmetric")
    if not np.all(np.diag(m) == 1.0):
        raise ValueError("correlation matrix diagonal is not exactly one")
    if np.max(np.abs(m)) > 1.0:
        raise ValueError("correlation matrix has entries outside [-1, 1]")
    lo = sym_eig(m).eigenvalues[0]
    if lo < -tol:
        raise ValueError(f"correlation matrix is not PSD: smallest eigenvalue {lo:.3g}")
    return m


# --- link matrix -------------------------------------------------------------


def link_matrix(model, collapse_time: bool = False) -> np.ndarray:
    """Link matrix ``A L B^T`` combining the static factors of ``model``.

    ``L`` is the single frontal core slice for SDT and Tucker, and the
    identity for PARAFAC. The time factor sign is fixed first (each column of
    ``C`` is given a nonnegative sum, flipping the matching core slice), so a
    covariance tensor yields a link matrix with positive diagonal.

    SDT and Tucker models with more than one time component raise unless
    ``collapse_time`` is set, in which case the core slices are summed with
    weights equal to the mean of each column of ``C``. That collapse is
    experimental.
    """
    kind = model_kind(model)
    if model.A.shape[0] != model.B.shape[0]:
        raise ValueError(f"link matrix needs I == J, got {model.A.shape[0]} and {model.B.shape[0]}")
    if kind == "parafac":
        return model.A @ model.B.T
    core = model.core() if kind == "sdt" else model.core
    sign = np.where(model.C.sum(axis=0) < 0, -1.0, 1.0)
    core = core * sign
    c = model.C * sign
    r = core.shape[2]
    if r == 1:
        slab = core[:, :, 0]
    elif collapse_time:
        log.warning("collapsing %d time components into one link matrix (experimental)", r)
        slab = np.tensordot(core, c.mean(axis=0), axes=([2], [0]))
    else:
        raise ValueError(
            f"model has {r} time components; the link matrix is defined for one. "
            "Pass collapse_time=True to sum core slices weighted by the mean time factor."
        )
    return model.A @ slab @ model.B.T


def normalize_to_correlation(g) -> np.ndarray:
    """Rescale ``g`` to unit diagonal: ``D^-1 g D^-1`` with ``D = sqrt(diag(g))``."""
    g = as_matrix(g).astype(float)
    if g.shape[0] != g.shape[1]:
        raise ValueError(f"link matrix must be square, got {g.shape}")
    d = np.diag(g)
    bad = np.flatnonzero(~(d > 0))
    if bad.size:
        raise ValueError(
            f"link matrix diagonal entry {bad[0] + 1} is {d[bad[0]]:.3g}; "
            "normalization needs a strictly positive diagonal"
        )
    s = 1.0 / np.sqrt(d)
    omega = g * s[:, None] * s[None, :]
    np.fill_diagonal(omega, 1.0)
    return omega


# --- nearest correlation -----------------------------------------------------


def _project_psd(x: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(x)
    return (v * np.maximum(w, 0.0)) @ v.T


def _finalize(x: np.ndarray) -> np.ndarray:
    # congruence scaling keeps PSD while forcing the diagonal to one exactly
    x = 0.5 * (x + x.T)
    d = np.sqrt(np.clip(np.diag(x), np.finfo(float).tiny, None))
    out = x / d[:, None] / d[None, :]
    out = 0.5 * (out + out.T)
    np.clip(out, -1.0, 1.0, out=out)
    np.fill_diagonal(out, 1.0)
    return out


def nearest_correlation(w, tol: float = 1e-7, max_iter: int = 200) -> np.ndarray:
    """Frobenius-nearest correlation matrix by alternating projections.

    Alternates between the PSD cone (eigenvalues clipped at zero) and the
    unit-diagonal matrices, with Dykstra's correction on the PSD step.
    Iteration stops once both the diagonal violation of the PSD iterate and
    the relative change between successive iterates drop below ``tol``.

    Raises
    ------
    NearestCorrelationError
        If ``max_iter`` sweeps do not reach ``tol``.
    """
    w = as_matrix(w).astype(float)
    if w.shape[0] != w.shape[1]:
        raise ValueError(f"nearest_correlation needs a square matrix, got {w.shape}")
    if not np.allclose(w, w.T, rtol=0, atol=1e-10 * max(1.0, np.abs(w).max())):
        raise ValueError("nearest_correlation needs a symmetric matrix")
    if tol <= 0 or max_iter < 1:
        raise ValueError("tol must be > 0 and max_iter >= 1")
    w = 0.5 * (w + w.T)

    y = w.copy()
    ds = np.zeros_like(w)
    residual = np.inf
    for _ in range(max_iter):
        r = y - ds
        x = _project_psd(r)
        ds = x - r
        y_new = x.copy()
        np.fill_diagonal(y_new, 1.0)
        diag_err = np.max(np.abs(np.diag(x) - 1.0))
        change = np.linalg.norm(y_new - y) / max(np.linalg.norm(y_new), 1.0)
        y = y_new
        residual = max(diag_err, change)
        if residual < tol:
            return _finalize(x)
    raise NearestCorrelationError(
        f"nearest_correlation did not converge in {max_iter} iterations (residual {residual:.3g})",
        _finalize(x),
        residual,
    )


# --- market mode ------------------------------------------------------------


def _component_weights(model) -> np.ndarray:
    kind = model_kind(model)
    if kind == "sdt":
        return np.linalg.norm(model.core_diag, axis=1)
    if kind == "tucker":
        if model.core.shape[0] != model.core.shape[1]:
            raise ValueError("market-mode removal needs P == Q for Tucker models")
        idx = np.arange(model.core.shape[0])
        return np.linalg.norm(model.core[idx, idx, :], axis=1)
    return np.linalg.norm(model.A, axis=0) * np.linalg.norm(model.B, axis=0)


def remove_market_mode(model):
    """Drop the static component with the largest weight (the market mode).

    The weight is ``|lambda_pp.|`` for SDT, ``|g_pp.|`` for Tucker and
    ``||a_p|| ||b_p||`` for PARAFAC. PARAFAC models also lose the matching
    column of ``C``, since a PARAFAC component is indivisible.
    """
    kind = model_kind(model)
    p = model.A.shape[1]
    if p < 2:
        raise ValueError("cannot remove the market mode from a single-component model")
    drop = int(np.argmax(_component_weights(model)))
    keep = np.array([i for i in range(p) if i != drop])
    if kind == "parafac":
        return ParafacModel(model.A[:, keep], model.B[:, keep], model.C[:, keep])
    if kind == "sdt":
        return SdtModel(model.A[:, keep], model.B[:, keep], model.C, model.core_diag[keep])
    return TuckerModel(model.A[:, keep], model.B[:, keep], model.C, model.core[np.ix_(keep, keep)])


# --- pipeline -----------------------------------------------------------------


@dataclass(frozen=True)
class HcmResult:
    theta: np.ndarray
    report: FitReport
    scan: "object"
    model: object
    link: np.ndarray
    omega: np.ndarray
    asymmetry: float
    projection_residual: float
    market_mode: str


def _check_slices_symmetric(t: np.ndarray, rtol: float = 1e-8) -> None:
    for k in range(t.shape[2]):
        s = t[:, :, k]
        scale = max(np.abs(s).max(), np.finfo(float).tiny)
        if np.abs(s - s.T).max() > rtol * scale:
            raise ValueError(f"frontal slice {k + 1} is not symmetric")


def build_hcm(
    t,
    kind: str = "sdt",
    ranks: Union[int, Sequence[int], None] = None,
    market_mode: str = "keep",
    cfg: AlsConfig = AlsConfig(),
    criterion: Optional[str] = None,
    time_rank: int = 1,
    nc_tol: float = 1e-7,
    nc_max_iter: int = 200,
    collapse_time: bool = False,
) -> HcmResult:
    """Run the full pipeline on an ``M x M x T`` covariance tensor.

    ``ranks`` is either one number of static components, a grid of them to
    scan (default ``2..min(M, 15)``), or for PARAFAC the component counts.
    ``market_mode`` is ``"keep"`` or ``"remove"``. Failures are re-raised as
    :class:`PipelineError` naming the stage.
    """
    from .model_selection import scan_ranks

    if market_mode not in ("keep", "remove"):
        raise ValueError(f"market_mode must be 'keep' or 'remove', got {market_mode!r}")
    t = np.asarray(as_tensor3(t), dtype=float)
    if t.shape[0] != t.shape[1]:
        raise ValueError(f"covariance tensor must be M x M x T, got {t.shape}")
    _check_slices_symmetric(t)

    if ranks is None:
        grid = list(range(2, min(t.shape[0], 15) + 1)) or [1]
    elif np.ndim(ranks) == 0:
        grid = [int(ranks)]
    else:
        grid = [int(r) for r in ranks]

    try:
        scan = scan_ranks(t, kind, grid, cfg, criterion=criterion, time_rank=time_rank)
    except Exception as exc:
        raise PipelineError("rank selection", exc) from exc
    return hcm_from_scan(scan, market_mode, nc_tol, nc_max_iter, collapse_time)


def hcm_from_scan(
    scan,
    market_mode: str = "keep",
    nc_tol: float = 1e-7,
    nc_max_iter: int = 200,
    collapse_time: bool = False,
) -> HcmResult:
    """Finish the pipeline from a rank scan: link matrix, normalization, projection.

    Lets one scan serve both market-mode settings.
    """
    if market_mode not in ("keep", "remove"):
        raise ValueError(f"market_mode must be 'keep' or 'remove', got {market_mode!r}")
    model, report = scan.best_model, scan.best_report

    try:
        if market_mode == "remove":
            model = remove_market_mode(model)
        gamma = link_matrix(model, collapse_time=collapse_time)
    except Exception as exc:
        raise PipelineError("link matrix", exc) from exc
    asym = float(np.linalg.norm(gamma - gamma.T))
    gamma = 0.5 * (gamma + gamma.T)

    try:
        omega = normalize_to_correlation(gamma)
    except Exception as exc:
        raise PipelineError("normalization", exc) from exc
    try:
        theta = nearest_correlation(omega, tol=nc_tol, max_iter=nc_max_iter)
    except Exception as exc:
        raise PipelineError("nearest correlation", exc) from exc
    return HcmResult(
        theta=theta,
        report=report,
        scan=scan,
        model=model,
        link=gamma,
        omega=omega,
        asymmetry=asym,
        projection_residual=float(np.linalg.norm(theta - omega)),
        market_mode=market_mode,
    )
