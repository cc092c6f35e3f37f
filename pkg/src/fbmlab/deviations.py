"""Increment autocovariance asymptotics and small-deviation estimates.

The quadratic functional of interest is the sum of squared unit-spaced
increments of fractional Brownian motion.  The module provides the exact
autocovariance, the squared-covariance double sum and its three growth
regimes (H below, at, and above 3/4), a Chernoff-type upper bound for
P{sum of squares <= x}, and a seeded Monte Carlo estimator for that
probability.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridDomainError, ParameterError
from .grid import TimeGrid
from .paths import CovarianceModel, HurstParam, as_hurst

__all__ = [
    "autocovariance_rho",
    "squared_cov_sum",
    "cov_sq_series_constant",
    "RateRegime",
    "rate_regime",
    "small_dev_rate",
    "gaussian_small_dev_bound",
    "MCEstimate",
    "mc_small_deviation",
    "mc_quadratic_small_dev",
]

# two-sided 99% normal quantile, for Wilson intervals
_Z99 = 2.5758293035489004

# switch to the cancellation-safe expansion of the second central
# difference of x^{2H} beyond this lag
_SERIES_CUTOFF = 100_000


def _rho_direct(m: np.ndarray, h: float) -> np.ndarray:
    p = 2.0 * h
    return 0.5 * ((m + 1.0) ** p + np.abs(m - 1.0) ** p - 2.0 * m ** p)


def _rho_series(m: np.ndarray, h: float) -> np.ndarray:
    # m^{2H} * sum_k binom(2H, 2k) m^{-2k}, three terms (rel. error O(m^{-6}))
    p = 2.0 * h
    c2 = p * (p - 1.0) / 2.0
    c4 = c2 * (p - 2.0) * (p - 3.0) / 12.0
    c6 = c4 * (p - 4.0) * (p - 5.0) / 30.0
    inv2 = m ** -2.0
    return m ** p * inv2 * (c2 + inv2 * (c4 + inv2 * c6))


def autocovariance_rho(m, H) -> float | np.ndarray:
    """Autocovariance of unit-spaced increments at integer lag m >= 0.

    Exact second central difference of x^{2H} at x = m; large lags use the
    series form of the difference to avoid catastrophic cancellation.
    """
    h = as_hurst(H).value
    m_arr = np.asarray(m, dtype=float)
    if np.any(m_arr < 0):
        raise GridDomainError("lag must be >= 0")
    out = np.where(
        m_arr >= _SERIES_CUTOFF,
        _rho_series(np.maximum(m_arr, 2.0), h),
        _rho_direct(m_arr, h),
    )
    return float(out) if out.ndim == 0 else out


def squared_cov_sum(n: int, H) -> float:
    """Double sum of squared increment covariances, reduced to one dimension.

    Equals sum over |m| < n of (n - |m|) rho(|m|)^2; O(n) time.
    """
    h = as_hurst(H).value
    n = int(n)
    if n < 1:
        raise ParameterError("n must be >= 1")
    m = np.arange(1, n, dtype=float)
    rho = autocovariance_rho(m, h) if n > 1 else np.zeros(0)
    return float(n + 2.0 * np.sum((n - m) * rho**2))


def cov_sq_series_constant(H, m_max: int = 10**6) -> tuple[float, float]:
    """Truncated series sum over all integer lags of rho(|m|)^2, plus a tail bound.

    Only converges for H < 3/4; the tail bound integrates the asymptotic
    envelope (H(2H-1))^2 m^{4H-4} beyond the truncation point.
    """
    h = as_hurst(H).require_long_memory()
    if h >= 0.75:
        raise ParameterError("the lag series converges only for H < 3/4")
    m = np.arange(1, int(m_max) + 1, dtype=float)
    total = 1.0 + 2.0 * float(np.sum(autocovariance_rho(m, h) ** 2))
    c = h * (2 * h - 1)
    tail = 2.0 * c**2 * m_max ** (4 * h - 3) / (3 - 4 * h)
    return total, tail


@dataclass(frozen=True)
class RateRegime:
    """Growth regime of the squared-covariance sum, and the decay rate r(n)."""

    hurst: HurstParam
    regime: str  # sub34 | at34 | super34

    def rate(self, n: int) -> float:
        n = int(n)
        if n < 2:
            raise ParameterError("rate defined for n >= 2")
        if self.regime == "sub34":
            return float(n)
        if self.regime == "at34":
            return n / np.log(n)
        return float(n ** (4 - 4 * self.hurst.value))

    def normalizer(self, n: int) -> float:
        """The normalization a_n under which the squared-covariance sum stabilizes."""
        n = int(n)
        if self.regime == "sub34":
            return float(n)
        if self.regime == "at34":
            return n * np.log(n)
        return float(n ** (4 * self.hurst.value - 2))


def rate_regime(H) -> RateRegime:
    h = as_hurst(H)
    h.require_long_memory()
    if h.value < 0.75:
        reg = "sub34"
    elif h.value == 0.75:
        reg = "at34"
    else:
        reg = "super34"
    return RateRegime(h, reg)


def small_dev_rate(n: int, H) -> float:
    """r(n): n below H=3/4, n/log n at 3/4, n^{4-4H} above."""
    return rate_regime(H).rate(n)


def gaussian_small_dev_bound(x: float, cov: np.ndarray) -> float:
    """Chernoff upper bound for P{sum xi_i^2 <= x}, xi centered jointly Gaussian.

    Returns exp(-(x - tr C)^2 / (4 sum_ij C_ij^2)) for 0 < x < tr C.  The
    denominator's factor 4 comes from optimizing exp(tx) E exp(-t sum xi^2)
    with log(1+u) >= u - u^2/2.
    """
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ParameterError("cov must be a square matrix")
    tr = float(np.trace(cov))
    if not 0.0 < x < tr:
        raise GridDomainError(f"x must lie in (0, trace) = (0, {tr})")
    frob2 = float(np.sum(cov**2))
    return float(np.exp(-((x - tr) ** 2) / (4.0 * frob2)))


@dataclass(frozen=True)
class MCEstimate:
    """Monte Carlo probability estimate with a 99% Wilson interval."""

    estimate: float
    ci_low: float
    ci_high: float
    trials: int
    seed: int
    zero_count_flag: bool

    def __post_init__(self):
        if not self.ci_low <= self.estimate <= self.ci_high:
            raise ParameterError("estimate must lie inside its interval")


def _wilson(k: int, n: int) -> tuple[float, float]:
    z2 = _Z99**2
    phat = k / n
    denom = 1.0 + z2 / n
    center = (phat + z2 / (2 * n)) / denom
    half = _Z99 * np.sqrt(phat * (1 - phat) / n + z2 / (4 * n**2)) / denom
    return max(center - half, 0.0), min(center + half, 1.0)


def _mc_estimate(k: int, trials: int, seed: int) -> MCEstimate:
    lo, hi = _wilson(k, trials)
    zero = k == 0
    est = 3.0 / trials if zero else k / trials  # rule of three on no successes
    return MCEstimate(est, lo, hi, trials, seed, zero)


def mc_quadratic_small_dev(
    cov: np.ndarray, x: float, trials: int, seed: int, chunk: int = 1 << 15
) -> MCEstimate:
    """Estimate P{sum xi_i^2 <= x} for xi ~ N(0, cov) by direct sampling."""
    cov = np.asarray(cov, dtype=float)
    fac = np.linalg.cholesky(cov)
    rng = np.random.default_rng(seed)
    trials = int(trials)
    k = 0
    done = 0
    while done < trials:
        b = min(chunk, trials - done)
        z = rng.standard_normal((b, cov.shape[0]))
        s = ((z @ fac.T) ** 2).sum(axis=1)
        k += int((s <= x).sum())
        done += b
    return _mc_estimate(k, trials, seed)


def mc_small_deviation(n: int, H, alpha: float, trials: int, seed: int) -> MCEstimate:
    """Estimate P{sum of n squared unit-spaced increments <= alpha * n}.

    Samples exact increments on the grid {0, 1/n, ..., 1} and rescales by
    n^H (self-similarity) so each increment has unit variance.
    """
    h = as_hurst(H)
    n = int(n)
    if trials < 1000:
        raise ParameterError("need at least 10^3 trials")
    if alpha <= 0.0:
        raise ParameterError("alpha must be positive")
    grid = TimeGrid.uniform(n + 1)
    model = CovarianceModel()
    rng_seed = int(seed)
    scale = float(n) ** h.value
    k = 0
    done = 0
    chunk = 1 << 14
    rng = np.random.default_rng(rng_seed)
    fac = model.factor(grid, h)
    while done < int(trials):
        b = min(chunk, int(trials) - done)
        z = rng.standard_normal((b, fac.shape[0]))
        inc = (z @ fac.T) * scale
        s = (inc**2).sum(axis=1)
        k += int((s <= alpha * n).sum())
        done += b
    return _mc_estimate(k, int(trials), rng_seed)
