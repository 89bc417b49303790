"""Choosing the number of components: information criteria, core consistency, DIFFIT."""

from __future__ import annotations

import csv
import io
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .complexity import check_kind, count_free_params
from .decompositions import AlsConfig, FitReport, ParafacModel, fit, tucker_core_from_factors
from .tensor_core import as_tensor3

log = logging.getLogger(__name__)

__all__ = [
    "count_free_params",
    "bic",
    "aic",
    "aicc",
    "concordia",
    "diffit",
    "RankScanResult",
    "RankScanError",
    "scan_ranks",
    "CONCORDIA_THRESHOLD",
]

CONCORDIA_THRESHOLD = 80.0


def _check_ic_args(ssr, u, w):
    if ssr < 0:
        raise ValueError(f"ssr must be nonnegative, got {ssr}")
    if not u > w >= 1:
        raise ValueError(f"need u > w >= 1, got u={u}, w={w}")


def _log_term(ssr: float, u: int) -> float:
    if ssr == 0:
        return -math.inf
    return u * math.log(ssr / u)


def bic(ssr: float, u: int, w: int) -> float:
    """Bayesian information criterion ``u ln(ssr/u) + w ln(u)``.

    A perfect fit (``ssr == 0``) returns ``-inf``.
    """
    _check_ic_args(ssr, u, w)
    return _log_term(ssr, u) + w * math.log(u)


def aic(ssr: float, u: int, w: int) -> float:
    """Akaike information criterion ``u ln(ssr/u) + 2w``."""
    _check_ic_args(ssr, u, w)
    return _log_term(ssr, u) + 2 * w


def aicc(ssr: float, u: int, w: int) -> float:
    """Small-sample corrected AIC ``u ln(ssr/u) + 2w u / (u - w - 1)``."""
    _check_ic_args(ssr, u, w)
    if u <= w + 1:
        raise ValueError(f"AICc needs u > w + 1, got u={u}, w={w}")
    return _log_term(ssr, u) + 2 * w * (u / (u - w - 1))


def concordia(t, m: ParafacModel) -> float:
    """Core consistency (percent) of a PARAFAC model fitted to ``t``.

    Factor columns are normalized to unit length; the least-squares Tucker
    core for the normalized factors is then divided elementwise by the
    geometric mean of the component weights, so an exact PARAFAC structure
    gives a superdiagonal core of ones. The score is
    ``100 * (1 - sum((G - I)^2) / R)``. It is 100 for a perfect structure,
    and can be negative. A one-component model scores 100 by definition.
    """
    t = as_tensor3(t)
    if m.shape != t.shape:
        raise ValueError(f"model shape {m.shape} does not match tensor {t.shape}")
    r = m.rank
    if r == 1:
        return 100.0
    norms = [np.linalg.norm(f, axis=0) for f in (m.A, m.B, m.C)]
    if any(np.any(n == 0) for n in norms):
        raise ValueError("PARAFAC model has an all-zero component")
    a, b, c = (f / n for f, n in zip((m.A, m.B, m.C), norms))
    for f, name in ((a, "A"), (b, "B"), (c, "C")):
        if np.linalg.matrix_rank(f) < r:
            warnings.warn(f"factor {name} is rank deficient; core uses the pseudoinverse", RuntimeWarning)
    g = tucker_core_from_factors(t, a, b, c)
    lam = norms[0] * norms[1] * norms[2]
    cube = np.cbrt(np.einsum("p,q,r->pqr", lam, lam, lam))
    g = g / cube
    target = np.zeros_like(g)
    idx = np.arange(r)
    target[idx, idx, idx] = 1.0
    return float(100.0 * (1.0 - np.sum((g - target) ** 2) / r))


def diffit(fits: Sequence[Tuple[int, float]]) -> int:
    """Pick a model size by the DIFFIT heuristic.

    ``fits`` holds ``(s, fit)`` pairs, ``s`` being the total number of
    components. When several entries share ``s`` only the best fit is kept.
    With ``dif(s) = fit(s) - fit(s_prev)``, the selected ``s`` maximizes
    ``dif(s) / dif(s_next)`` over interior sizes; ties go to the smallest
    ``s``. Fits must not decrease with ``s``.
    """
    best = {}
    for s, f in fits:
        s = int(s)
        best[s] = max(float(f), best.get(s, -math.inf))
    sizes = sorted(best)
    if len(sizes) < 3:
        raise ValueError("DIFFIT needs at least three distinct model sizes")
    values = np.array([best[s] for s in sizes])
    if np.any(np.diff(values) < 0):
        raise ValueError("DIFFIT needs fits that do not decrease with model size")
    dif = np.diff(values)
    ratios = []
    for n, d in zip(dif[:-1], dif[1:]):
        if d > 0:
            ratios.append(n / d)
        else:
            ratios.append(math.inf if n > 0 else 0.0)
    return sizes[1 + int(np.argmax(ratios))]


class RankScanError(RuntimeError):
    """Every candidate fit in a rank scan failed."""

    def __init__(self, failures: dict):
        detail = "; ".join(f"rank {r}: {msg}" for r, msg in failures.items())
        super().__init__(f"all rank-scan fits failed ({detail})")
        self.failures = failures


@dataclass
class RankScanResult:
    kind: str
    criterion: str
    ranks: List[int]
    values: List[float]
    reports: List[Optional[FitReport]]
    selected: int
    models: List[object] = field(default_factory=list, repr=False)

    @property
    def best_index(self) -> int:
        return self.ranks.index(self.selected)

    @property
    def best_model(self):
        return self.models[self.best_index]

    @property
    def best_report(self) -> FitReport:
        return self.reports[self.best_index]

    def to_csv(self) -> str:
        """Scan table with columns ``rank, <criterion>, ssr, iterations, converged``."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["rank", self.criterion, "ssr", "iterations", "converged"])
        for r, v, rep in zip(self.ranks, self.values, self.reports):
            if rep is None:
                writer.writerow([r, "nan", "nan", 0, "false"])
            else:
                writer.writerow([r, repr(float(v)), repr(rep.ssr), rep.iterations, str(rep.converged).lower()])
        return buf.getvalue()


_IC = {"bic": bic, "aic": aic, "aicc": aicc}


def _scan_ranks_for(kind: str, r: int, time_rank: int):
    if kind == "parafac":
        return r
    return (r, r, time_rank)


def scan_ranks(
    t,
    kind: str,
    rank_grid: Sequence[int],
    cfg: AlsConfig = AlsConfig(),
    criterion: Optional[str] = None,
    time_rank: int = 1,
    threshold: float = CONCORDIA_THRESHOLD,
) -> RankScanResult:
    """Fit every candidate rank and select one.

    For Tucker and SDT the grid varies the number of static components
    ``P = Q`` with ``time_rank`` time components; for PARAFAC it varies ``R``.
    The default criterion is BIC for Tucker/SDT (minimum wins) and CONCORDIA
    for PARAFAC (largest rank scoring at least ``threshold``). ``"aic"``,
    ``"aicc"`` and ``"diffit"`` (on explained variance ``1 - eps^2``) are also
    accepted.
    """
    kind = check_kind(kind)
    t = np.asarray(as_tensor3(t), dtype=float)
    grid = sorted({int(r) for r in rank_grid})
    if not grid:
        raise ValueError("rank grid is empty")
    if criterion is None:
        criterion = "concordia" if kind == "parafac" else "bic"
    criterion = criterion.lower()
    if criterion not in ("bic", "aic", "aicc", "concordia", "diffit"):
        raise ValueError(f"unknown criterion {criterion!r}")
    if criterion == "concordia" and kind != "parafac":
        raise ValueError("CONCORDIA applies to PARAFAC models only")

    u = int(np.prod(t.shape))
    values, reports, models, failures = [], [], [], {}
    for r in grid:
        try:
            model, report = fit(t, kind, _scan_ranks_for(kind, r, time_rank), cfg)
            if criterion in _IC:
                w = count_free_params(kind, t.shape, _scan_ranks_for(kind, r, time_rank))
                value = _IC[criterion](report.ssr, u, w)
            elif criterion == "concordia":
                value = concordia(t, model)
            else:
                value = 1.0 - report.rel_error ** 2
        except (ValueError, np.linalg.LinAlgError, FloatingPointError) as exc:
            log.warning("rank %d failed: %s", r, exc)
            failures[r] = str(exc)
            model, report, value = None, None, math.nan
        values.append(float(value))
        reports.append(report)
        models.append(model)
    if len(failures) == len(grid):
        raise RankScanError(failures)

    ok = [i for i, rep in enumerate(reports) if rep is not None]
    if criterion in _IC:
        sel = min(ok, key=lambda i: (values[i], i))
    elif criterion == "concordia":
        passing = [i for i in ok if values[i] >= threshold]
        if passing:
            sel = max(passing)
        else:
            log.warning("no rank reaches CONCORDIA %.0f; selecting the smallest rank", threshold)
            sel = ok[0]
    else:
        if len(ok) >= 3:
            # ALS fits need not be monotone in rank; DIFFIT wants a running best
            best = np.maximum.accumulate([values[i] for i in ok])
            s = diffit([(grid[i], v) for i, v in zip(ok, best)])
            sel = grid.index(s)
        else:
            sel = ok[-1]
    return RankScanResult(kind, criterion, grid, values, reports, grid[sel], models)
