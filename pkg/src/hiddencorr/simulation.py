"""Synthetic covariance tensors with a known correlation structure.

The generator builds a block-structured correlation matrix from Vine-Beta
draws, turns it into a low-rank covariance matrix, modulates it by a positive
time series and adds Gaussian noise. All randomness comes from one
``numpy.random.default_rng(seed)`` (PCG64) stream, so a seed fixes the output.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import block_diag

from .hcm import nearest_correlation
from .linalg import svd
from .tensor_core import as_tensor3

__all__ = [
    "SimConfig",
    "SimOutput",
    "vine_beta_corr",
    "block_diag_corr",
    "ar1_volatility_series",
    "simulate",
    "split_tensor",
    "block_labels",
]

_PARTIAL_EPS = 1e-12


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def vine_beta_corr(n: int, d: float, seed=None) -> np.ndarray:
    """Random ``n x n`` correlation matrix from the C-vine with Beta partials.

    Every partial correlation is drawn from ``Beta(d, d)`` rescaled to
    ``(-1, 1)``, the same shape at every vine level. Small ``d`` pushes the
    partial correlations, and hence the correlations, toward the boundaries.
    The vine recursion
    ``rho = p * sqrt((1 - rho_li^2)(1 - rho_lk^2)) + rho_li * rho_lk``
    maps partials to correlations, and the result is PSD by construction.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not d > 0:
        raise ValueError("d must be > 0")
    rng = _rng(seed)
    partial = np.zeros((n, n))
    corr = np.eye(n)
    for k in range(n - 1):
        draws = 2.0 * rng.beta(d, d, size=n - k - 1) - 1.0
        partial[k, k + 1:] = np.clip(draws, -1.0 + _PARTIAL_EPS, 1.0 - _PARTIAL_EPS)
        p = partial[k, k + 1:].copy()
        for l in range(k - 1, -1, -1):
            pl = partial[l, k + 1:]
            p = p * np.sqrt((1.0 - pl ** 2) * (1.0 - partial[l, k] ** 2)) + pl * partial[l, k]
        corr[k, k + 1:] = p
        corr[k + 1:, k] = p
    return corr


def block_diag_corr(sizes: Sequence[int], d: float, seed=None) -> np.ndarray:
    """Block-diagonal matrix of independent Vine-Beta blocks, zeros elsewhere."""
    sizes = [int(s) for s in sizes]
    if not sizes or any(s < 1 for s in sizes):
        raise ValueError("block sizes must be a nonempty list of positive integers")
    rng = _rng(seed)
    return block_diag(*[vine_beta_corr(s, d, rng) for s in sizes])


def block_labels(sizes: Sequence[int]) -> np.ndarray:
    """Integer block label for every row of a block-diagonal matrix."""
    return np.repeat(np.arange(len(sizes)), sizes)


def ar1_volatility_series(
    T: int,
    seed=None,
    persistence: float = 0.95,
    innovation_sd: float = 0.1,
    level: float = 20.0,
) -> np.ndarray:
    """Positive series ``level * exp(h_t)`` with ``h`` a stationary Gaussian AR(1).

    The default level is of the order of a volatility index quoted in points.
    """
    rng = _rng(seed)
    h = np.empty(T)
    h[0] = rng.normal(0.0, innovation_sd / np.sqrt(1.0 - persistence ** 2))
    eps = rng.normal(0.0, innovation_sd, size=T - 1)
    for t in range(1, T):
        h[t] = persistence * h[t - 1] + eps[t - 1]
    return level * np.exp(h)


@dataclass(frozen=True)
class SimConfig:
    """Parameters of :func:`simulate`; defaults give a 100 x 100 x 150 tensor of rank 10.

    ``time_series`` overrides the synthesized AR(1) series and must then have
    length ``T``. Variances are drawn log-uniformly on ``variance_range``.
    """

    block_sizes: Tuple[int, ...] = (20, 10, 30, 15, 25)
    d_block: float = 0.2
    d_full: float = 1.0
    mix: Tuple[float, float] = (0.9, 0.1)
    svd_rank: int = 10
    T: int = 150
    time_series: Optional[Tuple[float, ...]] = None
    noise_sigma: float = 1.0
    variance_range: Tuple[float, float] = (0.5, 2.0)
    series_level: float = 20.0
    series_persistence: float = 0.95
    series_innovation_sd: float = 0.1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "block_sizes", tuple(int(s) for s in self.block_sizes))
        object.__setattr__(self, "mix", tuple(float(x) for x in self.mix))
        if self.time_series is not None:
            object.__setattr__(self, "time_series", tuple(float(x) for x in self.time_series))
        if not self.block_sizes or any(s < 1 for s in self.block_sizes):
            raise ValueError("block sizes must be positive")
        if len(self.mix) != 2 or min(self.mix) < 0 or not np.isclose(sum(self.mix), 1.0):
            raise ValueError("mix weights must be two nonnegative numbers summing to one")
        if not (self.d_block > 0 and self.d_full > 0):
            raise ValueError("Beta shape parameters must be positive")
        if not 1 <= self.svd_rank <= self.M:
            raise ValueError(f"svd_rank must be in 1..{self.M}")
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
        if self.time_series is not None:
            if len(self.time_series) != self.T:
                raise ValueError(f"time series has length {len(self.time_series)}, expected T={self.T}")
            if min(self.time_series) <= 0:
                raise ValueError("time series values must be strictly positive")

    @property
    def M(self) -> int:
        return sum(self.block_sizes)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SimOutput:
    omega_true: np.ndarray
    sigma: np.ndarray
    sigma_svd: np.ndarray
    tensor: np.ndarray
    time_series: np.ndarray
    variances: np.ndarray = field(repr=False)
    config: SimConfig = field(repr=False)


def _symmetric_noise(rng: np.random.Generator, m: int, T: int) -> np.ndarray:
    z = rng.standard_normal((m, m, T))
    upper = np.triu(np.ones((m, m), dtype=bool))
    z = np.where(upper[:, :, None], z, np.transpose(z, (1, 0, 2)))
    return z


def simulate(cfg: SimConfig = SimConfig()) -> SimOutput:
    """Generate a covariance tensor with known correlation and time component.

    Frontal slice ``t`` equals ``tau[t] * Sigma_svd + noise_sigma * N_t``,
    where ``Sigma_svd`` is the rank-``svd_rank`` truncation of
    ``diag(sqrt(v)) Omega diag(sqrt(v))``, ``Omega`` is the nearest
    correlation matrix to ``mix[0] * E + mix[1] * S`` (``E`` block-diagonal
    Vine-Beta, ``S`` a full Vine-Beta draw), and ``N_t`` is a symmetric
    matrix of independent standard normal entries.
    """
    rng = np.random.default_rng(cfg.seed)
    m = cfg.M
    e = block_diag_corr(cfg.block_sizes, cfg.d_block, rng)
    s = vine_beta_corr(m, cfg.d_full, rng)
    omega = nearest_correlation(cfg.mix[0] * e + cfg.mix[1] * s)

    lo, hi = cfg.variance_range
    v = np.exp(rng.uniform(np.log(lo), np.log(hi), size=m))
    sd = np.sqrt(v)
    sigma = omega * sd[:, None] * sd[None, :]

    u, sv, vv = svd(sigma)
    k = cfg.svd_rank
    sigma_svd = (u[:, :k] * sv[:k]) @ vv[:, :k].T
    asym = np.abs(sigma_svd - sigma_svd.T).max()
    if asym > 1e-10 * max(1.0, np.abs(sigma_svd).max()):
        raise RuntimeError(f"truncated covariance is not symmetric (max asymmetry {asym:.3g})")
    sigma_svd = 0.5 * (sigma_svd + sigma_svd.T)

    if cfg.time_series is not None:
        tau = np.asarray(cfg.time_series, dtype=float)
    else:
        tau = ar1_volatility_series(
            cfg.T, rng, cfg.series_persistence, cfg.series_innovation_sd, cfg.series_level
        )
    tensor = sigma_svd[:, :, None] * tau[None, None, :]
    if cfg.noise_sigma > 0:
        tensor = tensor + cfg.noise_sigma * _symmetric_noise(rng, m, cfg.T)
    return SimOutput(omega, sigma, sigma_svd, tensor, tau, v, cfg)


def split_tensor(t, at: int) -> Tuple[np.ndarray, np.ndarray]:
    """Split along time into slices ``1..at`` and ``at+1..K`` (1-based)."""
    t = as_tensor3(t)
    k = t.shape[2]
    if not 1 <= at < k:
        raise IndexError(f"split point {at} out of range 1..{k - 1}")
    return t[:, :, :at].copy(), t[:, :, at:].copy()
