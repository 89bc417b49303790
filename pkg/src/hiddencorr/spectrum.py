"""Two-sample tests on eigenvalue spectra of correlation matrices."""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import comb
from scipy.stats import chi2, rankdata

from .linalg import sym_eig
from .tensor_core import as_matrix

__all__ = [
    "TestResult",
    "SpectrumComparison",
    "kruskal_wallis",
    "ks_two_sample",
    "kolmogorov_sf",
    "compare_spectra",
    "block_contrast",
]

ZERO_EIG = 1e-10
EXACT_KS_MAX_N = 20
_KS_TERMS = 100


class TestResult(NamedTuple):
    statistic: float
    pvalue: float


def _vector(x, name):
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains NaN or Inf")
    return x


def kruskal_wallis(x, y) -> TestResult:
    """Kruskal-Wallis H test for two samples.

    Ranks are pooled with midranks for ties; ``H`` is divided by the usual
    tie correction ``1 - sum(t^3 - t) / (n^3 - n)`` and the p-value comes
    from the chi-square distribution with one degree of freedom. If every
    pooled value is equal the result is ``H = 0, p = 1``.
    """
    x, y = _vector(x, "x"), _vector(y, "y")
    pooled = np.concatenate([x, y])
    n = pooled.size
    ranks = rankdata(pooled)
    _, counts = np.unique(pooled, return_counts=True)
    ties = 1.0 - np.sum(counts ** 3 - counts) / (n ** 3 - n) if n > 1 else 0.0
    if ties <= 0:
        return TestResult(0.0, 1.0)
    h = 0.0
    for r in (ranks[: x.size], ranks[x.size:]):
        h += r.sum() ** 2 / r.size
    h = 12.0 / (n * (n + 1)) * h - 3.0 * (n + 1)
    h = max(h / ties, 0.0)
    return TestResult(float(h), float(chi2.sf(h, 1)))


def kolmogorov_sf(lam: float, terms: int = _KS_TERMS) -> float:
    """Survival function of the Kolmogorov distribution,
    ``2 * sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lam^2)``, truncated at ``terms``."""
    if lam <= 0:
        return 1.0
    k = np.arange(1, terms + 1)
    s = 2.0 * np.sum((-1.0) ** (k - 1) * np.exp(-2.0 * k ** 2 * lam ** 2))
    return float(min(max(s, 0.0), 1.0))


def _ks_stats(order_labels: np.ndarray, group_end: np.ndarray, n: int, m: int) -> np.ndarray:
    # order_labels: (batch, n+m) 1 where the sorted pooled value belongs to x
    cx = np.cumsum(order_labels, axis=-1) / n
    cy = np.cumsum(1 - order_labels, axis=-1) / m
    diff = np.abs(cx - cy)[..., group_end]
    return diff.max(axis=-1)


def _ks_statistic(x: np.ndarray, y: np.ndarray) -> float:
    pooled = np.concatenate([x, y])
    order = np.argsort(pooled, kind="mergesort")
    labels = (order < x.size).astype(float)
    sorted_vals = pooled[order]
    group_end = np.flatnonzero(np.append(np.diff(sorted_vals) != 0, True))
    return float(_ks_stats(labels, group_end, x.size, y.size))


def _ks_exact_pvalue(x: np.ndarray, y: np.ndarray, d: float) -> float:
    n, m = x.size, y.size
    pooled = np.sort(np.concatenate([x, y]))
    group_end = np.flatnonzero(np.append(np.diff(pooled) != 0, True))
    total = n + m
    combos = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations(range(total), n)),
        dtype=np.int64,
        count=int(comb(total, n, exact=True)) * n,
    ).reshape(-1, n)
    labels = np.zeros((combos.shape[0], total))
    np.put_along_axis(labels, combos, 1.0, axis=1)
    stats = _ks_stats(labels, group_end, n, m)
    return float(np.mean(stats >= d - 1e-12))


def ks_two_sample(x, y, method: str = "auto") -> TestResult:
    """Two-sample Kolmogorov-Smirnov test.

    ``D = sup |F_x - F_y|``. With ``method="asymptotic"`` the p-value is
    ``kolmogorov_sf(sqrt(n m / (n + m)) * D)``; ``method="exact"`` enumerates
    every relabelling of the pooled sample (feasible for ``n + m <= 20``).
    ``"auto"`` uses the exact p-value when ``n + m <= 20``.
    """
    x, y = _vector(x, "x"), _vector(y, "y")
    if method not in ("auto", "exact", "asymptotic"):
        raise ValueError(f"unknown method {method!r}")
    d = _ks_statistic(x, y)
    n, m = x.size, y.size
    if method == "exact" or (method == "auto" and n + m <= EXACT_KS_MAX_N):
        if n + m > 2 * EXACT_KS_MAX_N:
            raise ValueError("exact KS p-value is limited to small samples")
        return TestResult(d, _ks_exact_pvalue(x, y, d))
    en = n * m / (n + m)
    return TestResult(d, kolmogorov_sf(math.sqrt(en) * d))


@dataclass(frozen=True)
class SpectrumComparison:
    eigs_1: np.ndarray
    eigs_2: np.ndarray
    kw: TestResult
    ks: TestResult

    def to_csv(self) -> str:
        """Two-row table of p-values: Kruskal-Wallis, then Kolmogorov-Smirnov."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["test", "statistic", "p_value"])
        w.writerow(["Kruskal-Wallis", repr(self.kw.statistic), repr(self.kw.pvalue)])
        w.writerow(["Kolmogorov-Smirnov", repr(self.ks.statistic), repr(self.ks.pvalue)])
        return buf.getvalue()


def compare_spectra(t1, t2, drop_zero: bool = False) -> SpectrumComparison:
    """Test whether two correlation matrices have the same eigenvalue distribution.

    With ``drop_zero`` eigenvalues below ``1e-10`` are discarded first, which
    matters for low-rank matrices.
    """
    eigs = []
    for m in (t1, t2):
        m = as_matrix(m)
        w = sym_eig(m).eigenvalues
        if not np.isclose(w.sum(), np.trace(m), rtol=1e-8, atol=1e-8):
            raise ValueError("eigenvalues do not sum to the trace")
        if drop_zero:
            w = w[w > ZERO_EIG]
        eigs.append(w)
    return SpectrumComparison(eigs[0], eigs[1], kruskal_wallis(*eigs), ks_two_sample(*eigs))


def block_contrast(corr, labels: Sequence[int]) -> float:
    """Mean absolute within-block correlation minus mean absolute between-block correlation.

    Diagonal entries are excluded. Descriptive only: there is no test
    attached to this number.
    """
    c = np.abs(as_matrix(corr))
    labels = np.asarray(labels)
    if labels.shape != (c.shape[0],):
        raise ValueError("need one label per row")
    same = labels[:, None] == labels[None, :]
    off = ~np.eye(c.shape[0], dtype=bool)
    within = c[same & off]
    between = c[~same]
    if within.size == 0 or between.size == 0:
        raise ValueError("need at least one within-block pair and one between-block pair")
    return float(within.mean() - between.mean())
