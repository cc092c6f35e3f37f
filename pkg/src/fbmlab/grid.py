"""Time grids on [0, 1] with a dual log-scale representation.

Grids used by the construction cluster exponentially at t = 1, where the
plain float representation of t loses all resolution.  Every grid therefore
carries u = -log(1 - t) alongside t, and all lag (time-difference)
computations near 1 are done in u-space, where they stay exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridDomainError

__all__ = ["TimeGrid", "log_gap", "stable_lag"]

# relative consistency required between the t and u representations
_DUAL_RTOL = 1e-12
# below this lag the sampler is considered unstable (lag space floor)
DEFAULT_LAG_FLOOR = 1e-12


def log_gap(t: np.ndarray | float) -> np.ndarray | float:
    """u = -log(1 - t), with u = inf at t = 1."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return -np.log1p(-t)


def stable_lag(t1: float, u1: float, t2: float, u2: float) -> float:
    """|t2 - t1| computed without cancellation for points near 1."""
    if max(t1, t2) <= 0.5:
        return abs(t2 - t1)
    lo, hi = (u1, u2) if u1 <= u2 else (u2, u1)
    return float(np.exp(-lo) * -np.expm1(lo - hi))


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing times in [0, 1] plus their log-scale duals."""

    t: np.ndarray
    u: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        object.__setattr__(self, "t", t)
        if self.u is None:
            object.__setattr__(self, "u", log_gap(t))
        else:
            object.__setattr__(self, "u", np.asarray(self.u, dtype=float))
        self._validate()

    def _validate(self):
        t, u = self.t, self.u
        if t.ndim != 1 or len(t) != len(u):
            raise GridDomainError("times and log-gaps must be 1-d arrays of equal length")
        if len(t) == 0:
            raise GridDomainError("empty grid")
        if t[0] < 0.0 or t[-1] > 1.0:
            raise GridDomainError(f"times must lie in [0, 1], got [{t[0]}, {t[-1]}]")
        if not np.all(np.diff(t) > 0) or not np.all(np.diff(u) > 0):
            raise GridDomainError("times must be strictly increasing")
        finite = np.isfinite(u)
        recon = -np.expm1(-u[finite])
        scale = np.maximum(np.abs(t[finite]), 1e-300)
        if np.any(np.abs(recon - t[finite]) > _DUAL_RTOL * np.maximum(scale, 1.0)):
            raise GridDomainError("t and u = -log(1-t) representations disagree")

    @classmethod
    def from_times(cls, times) -> "TimeGrid":
        return cls(np.asarray(times, dtype=float))

    @classmethod
    def from_log_gaps(cls, u) -> "TimeGrid":
        """Build from u-values; t = 1 - e^{-u} is derived (exact near 1)."""
        u = np.asarray(u, dtype=float)
        return cls(-np.expm1(-u), u)

    @classmethod
    def uniform(cls, n_points: int, t_end: float = 1.0) -> "TimeGrid":
        if n_points < 2:
            raise GridDomainError("a grid needs at least 2 points")
        return cls(np.linspace(0.0, t_end, n_points))

    def __len__(self) -> int:
        return len(self.t)

    def restricted(self, horizon: float) -> "TimeGrid":
        """Sub-grid of all points with t <= horizon."""
        m = self.t <= horizon + 1e-300
        return TimeGrid(self.t[m], self.u[m])

    def index_of(self, time: float) -> int:
        """Index of a grid point, tolerant to a few ulp of rounding."""
        i = int(np.searchsorted(self.t, time))
        tol = 8.0 * np.spacing(max(abs(time), 1e-300))
        for j in (i, i - 1):
            if 0 <= j < len(self.t) and abs(self.t[j] - time) <= tol:
                return j
        raise GridDomainError(f"time {time!r} is not a grid point")

    def gaps(self) -> np.ndarray:
        """Consecutive lags t[i+1] - t[i], cancellation-safe near 1."""
        t, u = self.t, self.u
        direct = np.diff(t)
        with np.errstate(over="ignore", invalid="ignore"):
            dual = np.exp(-u[:-1]) * -np.expm1(u[:-1] - u[1:])
        return np.where(t[1:] <= 0.5, direct, dual)

    def pairwise_lags(self) -> np.ndarray:
        """Matrix of |t_i - t_j|, cancellation-safe near 1."""
        t, u = self.t, self.u
        direct = np.abs(t[:, None] - t[None, :])
        near = t > 0.5
        if not near.any():
            return direct
        umin = np.minimum(u[:, None], u[None, :])
        with np.errstate(over="ignore", invalid="ignore"):
            dual = np.exp(-umin) * -np.expm1(-np.abs(u[:, None] - u[None, :]))
        both_near = near[:, None] & near[None, :]
        out = np.where(both_near, dual, direct)
        np.fill_diagonal(out, 0.0)
        return out

    def union(self, other: "TimeGrid") -> "TimeGrid":
        t = np.union1d(self.t, other.t)
        # keep the more precise u for shared points
        u = log_gap(t)
        for g in (self, other):
            idx = np.searchsorted(t, g.t)
            u[idx] = g.u
        return TimeGrid(t, u)
