"""From price or return panels to a covariance tensor.

Returns are log differences of prices. Each window of consecutive
observations gives one sample covariance matrix (``1/(n-1)`` normalization),
and the windows stacked along the third mode form the tensor.
"""

from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass
from datetime import date, datetime
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .io import ParseError

log = logging.getLogger(__name__)

__all__ = [
    "ReturnsPanel",
    "WindowSpec",
    "log_returns",
    "window_cov",
    "build_cov_tensor",
    "monthly_windows",
    "read_panel_csv",
]


@dataclass(frozen=True)
class ReturnsPanel:
    """``T_obs x M`` log-returns with ticker labels and increasing timestamps."""

    tickers: Tuple[str, ...]
    timestamps: Tuple[object, ...]
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ValueError("values must be a T_obs x M matrix")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "tickers", tuple(str(t) for t in self.tickers))
        object.__setattr__(self, "timestamps", tuple(self.timestamps))
        if len(self.tickers) != v.shape[1]:
            raise ValueError(f"{len(self.tickers)} tickers for {v.shape[1]} columns")
        if len(self.timestamps) != v.shape[0]:
            raise ValueError(f"{len(self.timestamps)} timestamps for {v.shape[0]} rows")
        for i in range(1, len(self.timestamps)):
            if not self.timestamps[i - 1] < self.timestamps[i]:
                raise ValueError(f"timestamps not strictly increasing at row {i + 1}")
        bad = np.flatnonzero(~np.isfinite(v).all(axis=1))
        if bad.size:
            raise ValueError(f"missing or non-finite values in row {bad[0] + 1}")

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True)
class WindowSpec:
    """Windows of ``length`` observations starting every ``step`` rows (default ``length``)."""

    length: int
    step: Optional[int] = None

    def __post_init__(self):
        if self.length < 2:
            raise ValueError("window length must be >= 2")
        if self.step is None:
            object.__setattr__(self, "step", self.length)
        if self.step < 1:
            raise ValueError("window step must be >= 1")

    def ranges(self, n_obs: int) -> List[range]:
        out = []
        start = 0
        while start + self.length <= n_obs:
            out.append(range(start, start + self.length))
            start += self.step
        return out


def log_returns(prices, tickers: Optional[Sequence[str]] = None, timestamps=None) -> ReturnsPanel:
    """Log-returns ``ln P_t - ln P_{t-1}`` of a positive price matrix.

    The returned panel has one row fewer than ``prices`` and carries the
    timestamps of rows ``2..T_obs``.
    """
    p = np.asarray(prices, dtype=float)
    if p.ndim != 2 or p.shape[0] < 2:
        raise ValueError("prices must be a matrix with at least two rows")
    m = p.shape[1]
    tickers = tuple(tickers) if tickers is not None else tuple(f"S{j + 1}" for j in range(m))
    bad = np.argwhere(~(p > 0))
    if bad.size:
        i, j = bad[0]
        raise ValueError(f"nonpositive or missing price {p[i, j]} at row {i + 1}, ticker {tickers[j]}")
    ts = tuple(timestamps)[1:] if timestamps is not None else tuple(range(2, p.shape[0] + 1))
    return ReturnsPanel(tickers, ts, np.diff(np.log(p), axis=0))


def window_cov(panel: ReturnsPanel, rows: range) -> np.ndarray:
    """Sample covariance of the panel rows in ``rows`` (0-based range)."""
    if len(rows) < 2:
        raise ValueError("a covariance window needs at least two observations")
    x = panel.values[rows.start:rows.stop:rows.step]
    xc = x - x.mean(axis=0)
    c = xc.T @ xc / (x.shape[0] - 1)
    return 0.5 * (c + c.T)


def monthly_windows(timestamps: Sequence) -> List[range]:
    """Group consecutive rows by calendar month; windows shorter than two rows are skipped."""
    out = []
    start = 0
    for i in range(1, len(timestamps) + 1):
        if i == len(timestamps) or (timestamps[i].year, timestamps[i].month) != (
            timestamps[start].year,
            timestamps[start].month,
        ):
            if i - start >= 2:
                out.append(range(start, i))
            else:
                log.warning("skipping month starting at row %d with a single observation", start + 1)
            start = i
    return out


def build_cov_tensor(panel: ReturnsPanel, spec="monthly") -> np.ndarray:
    """Stack window covariances into an ``M x M x T`` tensor.

    ``spec`` is a :class:`WindowSpec` or ``"monthly"`` (needs date
    timestamps). Trailing observations that do not fill a window are dropped
    with a warning.
    """
    n = panel.values.shape[0]
    if isinstance(spec, str):
        if spec != "monthly":
            raise ValueError(f"unknown window spec {spec!r}")
        if not all(isinstance(t, (date, datetime)) for t in panel.timestamps):
            raise ValueError("monthly windows need date timestamps")
        ranges = monthly_windows(panel.timestamps)
    else:
        ranges = spec.ranges(n)
        used = ranges[-1].stop if ranges else 0
        if ranges and n > used:
            warnings.warn(f"dropping {n - used} trailing observations that do not fill a window", RuntimeWarning)
    if not ranges:
        raise ValueError("panel does not contain a single full window")
    return np.stack([window_cov(panel, r) for r in ranges], axis=2)


def _parse_time(tok: str):
    tok = tok.strip()
    try:
        return date.fromisoformat(tok)
    except ValueError:
        return datetime.fromisoformat(tok)


def read_panel_csv(path, kind: str = "prices") -> ReturnsPanel:
    """Read a CSV with a header of tickers and ISO-8601 timestamps in column one.

    ``kind`` says whether the values are ``"prices"`` (converted to
    log-returns) or ``"returns"``. Rows with a missing value are rejected.
    """
    if kind not in ("prices", "returns"):
        raise ValueError(f"kind must be 'prices' or 'returns', got {kind!r}")
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", 1, str(path)) from None
        tickers = [h.strip() for h in header[1:]]
        if not tickers:
            raise ParseError("header lists no tickers", 1, str(path))
        stamps, rows = [], []
        for line, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            if len(row) != len(tickers) + 1:
                raise ParseError(f"expected {len(tickers) + 1} fields, got {len(row)}", line, str(path))
            try:
                stamps.append(_parse_time(row[0]))
            except ValueError:
                raise ParseError(f"bad timestamp {row[0]!r}", line, str(path)) from None
            vals = []
            for tok in row[1:]:
                tok = tok.strip()
                if tok == "":
                    raise ParseError("missing value", line, str(path))
                try:
                    v = float(tok)
                except ValueError:
                    raise ParseError(f"not a number: {tok!r}", line, str(path)) from None
                if not np.isfinite(v):
                    raise ParseError(f"non-finite value {tok!r}", line, str(path))
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise ParseError("no data rows", 2, str(path))
    values = np.array(rows)
    try:
        if kind == "prices":
            return log_returns(values, tickers, stamps)
        return ReturnsPanel(tickers, stamps, values)
    except ValueError as exc:
        raise ParseError(str(exc), 0, str(path)) from exc
