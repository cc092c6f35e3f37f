"""Sequential construction of an adapted step integrand whose running
pathwise integral is driven to a target value observed along an
exponentially refining partition of [0, 1].

Level n of the partition spans [t_n, t_{n+1}] with t_n = 1 - e^{-kappa^{n/a}}.
On each level the integrand is a signed scaled-increment block process
c (B(t) - B(s)) whose integral telescopes, block by block, to c/2 times the
squared block increment; the level stops at the first block boundary where
the accumulated integral covers the current target gap.  A level that
reaches its gap leaves the next level in the standard regime (Case 2,
uniform sub-blocks with the level coefficient); a level that runs out of
blocks short of its gap (exhaustion) sends the next level into the backup
regime (Case 1, geometrically shrinking reserve blocks whose coefficients
give each block the full gap in expectation, so the running integral grows
without bound in the mean and reaches any finite gap almost surely).

Grid stopping overshoots the threshold by at most one block gain; the
overshoot is recorded rather than rescaled away, because rescaling a
coefficient after observing the block increment would break adaptedness.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GridDomainError, ParameterError, ResolutionError
from .grid import DEFAULT_LAG_FLOOR, TimeGrid
from .fraccalc import LogWeight, SampledFunction, as_frac_order
from .paths import HurstParam, SamplePath, as_hurst

__all__ = [
    "PartitionLevel",
    "PartitionScheme",
    "build_partition",
    "construction_grid",
    "mu_window",
    "CausalityAudit",
    "TargetProcess",
    "target_constant",
    "target_lipschitz",
    "target_log_holder",
    "wiener_target_grid",
    "StepOutcome",
    "case1_step",
    "case2_step",
    "Block",
    "StepIntegrand",
    "LevelRecord",
    "RepresentationTrace",
    "build_representation",
    "tail_weighted_norm_diagnostic",
]


# ---------------------------------------------------------------------------
# partition geometry


@dataclass(frozen=True)
class PartitionLevel:
    """Level n: interval [t_lo, t_hi], n uniform sub-blocks, reserve blocks."""

    n: int
    t_lo: float
    t_hi: float
    u_lo: float
    u_hi: float
    delta: float  # t_hi - t_lo
    mesh: float  # delta / n
    coeff: float  # 2^{-n+3} mesh^{-2H} / n
    sub_t: np.ndarray  # n+1 boundaries of the uniform sub-blocks
    sub_u: np.ndarray
    reserve_t: np.ndarray  # geometric backup boundaries, t_lo excluded
    reserve_u: np.ndarray


@dataclass(frozen=True)
class PartitionScheme:
    """The full level table; points t_n = 1 - e^{-kappa^{n/a}}, n = 0..n_max+1."""

    kappa: float
    a: float
    n_max: int
    hurst: HurstParam
    t: np.ndarray
    u: np.ndarray
    levels: tuple[PartitionLevel, ...]
    max_gap_ratio: float  # max over levels of (1 - t_n) / delta_n
    reserve_depth: int
    lag_floor: float

    def level(self, n: int) -> PartitionLevel:
        return self.levels[n - 1]


def _level_point(u_lo: float, du: float, frac: float) -> tuple[float, float]:
    """Time at fraction frac of the level, exact in u-space.

    1 - x = e^{-u_lo} (1 - frac (1 - e^{-du})), so
    u(x) = u_lo - log1p(-frac (-expm1(-du))).
    """
    u = u_lo - math.log1p(-frac * -math.expm1(-du))
    return -math.expm1(-u), u


def build_partition(kappa: float, a: float, n_max: int, H,
                    reserve_depth: int = 20,
                    lag_floor: float = DEFAULT_LAG_FLOOR) -> PartitionScheme:
    """Level table for the partition t_n = 1 - e^{-kappa^{n/a}}.

    Requires 2 < kappa < 2^a and a deepest mesh above the lag floor; all
    points carry exact u = -log(1-t) duals.
    """
    h = as_hurst(H).require_long_memory()
    if not a > 1:
        raise ParameterError(f"need a > 1, got {a}")
    if not 2.0 < kappa < 2.0**a:
        raise ParameterError(f"need kappa in (2, 2^a) = (2, {2.0**a}), got {kappa}")
    n_max = int(n_max)
    if n_max < 2:
        raise ParameterError("need n_max >= 2")

    ns = np.arange(0, n_max + 2, dtype=float)
    u = kappa ** (ns / a)
    # scalar expm1 keeps these bit-identical with the level-point helper
    t = np.array([-math.expm1(-x) for x in u])

    levels = []
    max_ratio = 0.0
    for n in range(1, n_max + 1):
        u_lo, u_hi = float(u[n]), float(u[n + 1])
        du = u_hi - u_lo
        delta = math.exp(-u_lo) * -math.expm1(-du)
        mesh = delta / n
        if mesh < lag_floor:
            raise ResolutionError(
                f"mesh {mesh:.3e} at level {n} underflows the lag floor {lag_floor:.0e}"
            )
        max_ratio = max(max_ratio, 1.0 / -math.expm1(-du))
        sub = [_level_point(u_lo, du, k / n) for k in range(n + 1)]
        sub_t = np.array([s[0] for s in sub])
        sub_u = np.array([s[1] for s in sub])
        r_depth = min(reserve_depth, int(math.floor(math.log2(delta / lag_floor))))
        res = [_level_point(u_lo, du, 1.0 - 0.5**m) for m in range(1, r_depth + 1)]
        reserve_t = np.array([r[0] for r in res])
        reserve_u = np.array([r[1] for r in res])
        coeff = 2.0 ** (-n + 3) * mesh ** (-2.0 * h) / n
        levels.append(
            PartitionLevel(n, float(t[n]), float(t[n + 1]), u_lo, u_hi, delta,
                           mesh, coeff, sub_t, sub_u, reserve_t, reserve_u)
        )
    return PartitionScheme(float(kappa), float(a), n_max, as_hurst(H), t, u,
                           tuple(levels), float(max_ratio), int(reserve_depth),
                           float(lag_floor))


def construction_grid(scheme: PartitionScheme, block_refine: int = 3,
                      include_unit: bool = True) -> TimeGrid:
    """All sub-block boundaries, interior refinement points, and reserve
    boundaries, plus {0}, the level-0 anchor, and (optionally) t = 1."""
    ts = [0.0, float(scheme.t[0])]
    us = [0.0, float(scheme.u[0])]
    for lv in scheme.levels:
        du = lv.u_hi - lv.u_lo
        ts.extend(lv.sub_t)
        us.extend(lv.sub_u)
        ts.extend(lv.reserve_t)
        us.extend(lv.reserve_u)
        for k in range(lv.n):
            for j in range(1, block_refine + 1):
                frac = (k + j / (block_refine + 1)) / lv.n
                x, ux = _level_point(lv.u_lo, du, frac)
                ts.append(x)
                us.append(ux)
    if include_unit:
        ts.append(1.0)
        us.append(math.inf)
    order = np.argsort(ts, kind="stable")
    t_arr = np.asarray(ts)[order]
    u_arr = np.asarray(us)[order]
    keep = np.concatenate(([True], np.diff(t_arr) > 0))
    return TimeGrid(t_arr[keep], u_arr[keep])


def mu_window(kappa: float, a: float) -> tuple[float, float]:
    """Admissible exponents for the tail weight: (1/2, a log2/log kappa - 1/2)."""
    hi = a * math.log(2.0) / math.log(kappa) - 0.5
    if hi <= 0.5:
        raise ParameterError(
            f"empty weight-exponent window for kappa={kappa}, a={a}"
        )
    return 0.5, hi


# ---------------------------------------------------------------------------
# causality bookkeeping and targets


class CausalityAudit:
    """Log of (decision time, newest data timestamp consumed)."""

    def __init__(self):
        self.records: list[tuple[float, float]] = []

    def access(self, decision_time: float, data_time: float) -> None:
        self.records.append((float(decision_time), float(data_time)))

    @property
    def ok(self) -> bool:
        return all(d >= x for d, x in self.records)

    def digest(self) -> dict:
        worst = max((x - d for d, x in self.records), default=float("-inf"))
        return {"n_records": len(self.records), "worst_lookahead": worst,
                "ok": self.ok}


@dataclass(frozen=True)
class TargetProcess:
    """An adapted process observed along the partition; its final value is
    the quantity the construction drives the running integral to."""

    kind: str  # lipschitz-of-fbm | log-holder-wiener | constant
    log_holder_a: float  # exponent in |Z(1)-Z(t)| <= C |log(1-t)|^{-a}
    _evaluator: object = field(repr=False)

    def value(self, t: float, audit: CausalityAudit | None = None) -> float:
        return float(self._evaluator(t, audit if audit is not None else CausalityAudit()))


def target_constant(c: float) -> TargetProcess:
    def ev(t, audit):
        audit.access(t, 0.0)
        return c

    return TargetProcess("constant", math.inf, ev)


def target_lipschitz(f, path: SamplePath, log_holder_a: float = 3.0) -> TargetProcess:
    """Z(t) = f(B(t)) for a Lipschitz map f; log-Holder for every exponent."""

    def ev(t, audit):
        audit.access(t, t)
        return f(path.value_at(t))

    return TargetProcess("lipschitz-of-fbm", float(log_holder_a), ev)


def wiener_target_grid(scheme: PartitionScheme, refine: int = 4) -> TimeGrid:
    """Grid for the driving noise of the heavy-tailed target: refines the
    construction grid on [1/2, 1]."""
    base = construction_grid(scheme, block_refine=0, include_unit=False)
    keep = base.t >= 0.5
    ts = [0.0, 0.5]
    us = [0.0, math.log(2.0)]
    bt, bu = base.t[keep], base.u[keep]
    if len(bt) == 0 or bt[0] > 0.5:
        bt = np.concatenate(([0.5], bt))
        bu = np.concatenate(([math.log(2.0)], bu))
    for i in range(len(bt) - 1):
        du = bu[i + 1] - bu[i]
        for j in range(refine):
            u = bu[i] + du * j / refine
            ts.append(-math.expm1(-u))
            us.append(u)
    ts.append(float(bt[-1]))
    us.append(float(bu[-1]))
    order = np.argsort(ts, kind="stable")
    t_arr = np.asarray(ts)[order]
    u_arr = np.asarray(us)[order]
    keep2 = np.concatenate(([True], np.diff(t_arr) > 0))
    return TimeGrid(t_arr[keep2], u_arr[keep2])


def target_log_holder(d: float, wiener_path: SamplePath,
                      scheme: PartitionScheme) -> TargetProcess:
    """Z(t) = int_{1/2}^t (1-s)^{-1/2} |log(1-s)|^{-d} dW(s), d > 1.

    The driving path must be sampled on a grid refining the construction
    grid on [1/2, 1]; the final value adds an exact-variance tail increment
    (Var(Z(1)-Z(t)) = |log(1-t)|^{1-2d} / (2d-1)) beyond the last grid point.
    """
    if not d > 1:
        raise ParameterError("need d > 1")
    g = wiener_path.grid
    if g.t[-1] < scheme.t[-1]:
        raise GridDomainError("driving grid must reach the last partition point")
    mask = g.t >= 0.5
    st, su = g.t[mask], g.u[mask]
    sv = wiener_path.values[mask]
    # integrand at left nodes, stably in u: (1-s)^{-1/2} |log(1-s)|^{-d}
    gs = np.exp(0.5 * su[:-1]) * su[:-1] ** -d
    inc = np.diff(sv)
    partial = np.concatenate(([0.0], np.cumsum(gs * inc)))
    u_last = float(su[-1])
    tail_sd = math.sqrt(u_last ** (1.0 - 2.0 * d) / (2.0 * d - 1.0))
    tail = tail_sd * float(
        np.random.default_rng(wiener_path.seed + 0x5EED).standard_normal()
    )

    def ev(t, audit):
        if t >= 1.0:
            audit.access(t, 1.0)
            return float(partial[-1] + tail)
        audit.access(t, t)
        i = int(np.searchsorted(st, t, side="right")) - 1
        if i < 0:
            return 0.0
        return float(partial[i])

    return TargetProcess("log-holder-wiener", float(d) - 0.5, ev)


# ---------------------------------------------------------------------------
# level steps


@dataclass(frozen=True)
class Block:
    """One active scaled-increment block: psi = sign * coeff * (B(t) - B(t_start))."""

    level: int
    sub_index: int
    kind: str  # standard | backup
    coeff: float
    sign: float
    t_start: float
    t_end: float


@dataclass(frozen=True)
class StepOutcome:
    contribution: float  # signed addition to the running integral
    stop_index: int  # completed sub-blocks before stopping
    overshoot: float  # |running - |gap|| at the stop (shortfall when exhausted)
    exhausted: bool
    blocks: tuple[Block, ...]
    data_horizon: float  # newest path timestamp consumed


def _run_blocks(bounds_t: np.ndarray, coeffs: np.ndarray, level: int, kind: str,
                path: SamplePath, target_gap: float) -> StepOutcome:
    """Accumulate coeff/2 * (block increment)^2 until the gap is covered.

    The pathwise integral of c (B(t)-B(s)) over a completed block [s, s']
    is exactly c/2 (B(s')-B(s))^2; stopping happens at block boundaries,
    so the accumulated value is exact, not quadrature.
    """
    gap = abs(target_gap)
    sign = 1.0 if target_gap >= 0 else -1.0
    if gap == 0.0:
        return StepOutcome(0.0, 0, 0.0, False, (), float(bounds_t[0]))
    vals = np.array([path.value_at(t) for t in bounds_t])
    gains = 0.5 * coeffs * np.diff(vals) ** 2
    cum = np.cumsum(gains)
    hit = np.nonzero(cum >= gap)[0]
    if len(hit):
        k = int(hit[0])
        total, exhausted, stop = float(cum[k]), False, k + 1
    else:
        k = len(gains) - 1
        total, exhausted, stop = float(cum[-1]), True, len(gains)
    blocks = tuple(
        Block(level, j, kind, float(coeffs[j]), sign, float(bounds_t[j]),
              float(bounds_t[j + 1]))
        for j in range(stop)
    )
    return StepOutcome(sign * total, stop, abs(total - gap), exhausted, blocks,
                       float(bounds_t[stop]))


def case2_step(n: int, path: SamplePath, scheme: PartitionScheme,
               target_gap: float, coeff: float | None = None) -> StepOutcome:
    """Standard level step: n uniform sub-blocks with the level coefficient.

    target_gap is signed; the block process carries its sign, the running
    integral accumulates coeff/2 times squared sub-increments and stops at
    the first sub-block boundary past |target_gap|.
    """
    lv = scheme.level(n)
    c = lv.coeff if coeff is None else float(coeff)
    return _run_blocks(lv.sub_t, np.full(lv.n, c), n, "standard", path, target_gap)


def case1_step(n: int, path: SamplePath, scheme: PartitionScheme,
               target_gap: float) -> StepOutcome:
    """Backup level step on geometrically shrinking reserve blocks.

    Block m has length delta 2^{-m} and coefficient 2|gap| / length^{2H}, so
    each block adds the full gap in expectation and the running integral
    grows without bound in the mean; exhaustion (running out of reserve
    points) is a reported state, not an error.
    """
    lv = scheme.level(n)
    if target_gap == 0.0:
        return StepOutcome(0.0, 0, 0.0, False, (), lv.t_lo)
    h = scheme.hurst.value
    bounds = np.concatenate(([lv.t_lo], lv.reserve_t))
    lengths = np.diff(bounds)
    coeffs = 2.0 * abs(target_gap) / lengths ** (2.0 * h)
    return _run_blocks(bounds, coeffs, n, "backup", path, target_gap)


# ---------------------------------------------------------------------------
# the sequential build


@dataclass(frozen=True)
class StepIntegrand:
    """The adapted integrand as a list of active scaled-increment blocks."""

    blocks: tuple[Block, ...]

    def sample_on(self, path: SamplePath) -> SampledFunction:
        """Step-interpolated values on the path grid: within an active block
        starting at s, psi(x) = sign * coeff * (B(x) - B(s)); zero elsewhere."""
        t = path.grid.t
        vals = np.zeros(len(t))
        if self.blocks:
            starts = np.array([b.t_start for b in self.blocks])
            ends = np.array([b.t_end for b in self.blocks])
            sgn = np.array([b.sign for b in self.blocks])
            cf = np.array([b.coeff for b in self.blocks])
            b0 = np.array([path.value_at(b.t_start) for b in self.blocks])
            j = np.searchsorted(starts, t, side="right") - 1
            jj = np.clip(j, 0, len(starts) - 1)
            inside = (j >= 0) & (t >= starts[jj]) & (t < ends[jj])
            vals[inside] = (
                sgn[jj] * cf[jj] * (path.values - b0[jj])
            )[inside]
        return SampledFunction(path.grid, vals, "step")


@dataclass(frozen=True)
class LevelRecord:
    n: int
    case: int
    xi: float
    v_start: float
    v_end: float
    gap: float
    stop_index: int
    overshoot: float
    exhausted: bool


@dataclass(frozen=True)
class RepresentationTrace:
    levels: tuple[LevelRecord, ...]
    xi_final: float
    final_error: float
    n2_observed: int | None  # first level from which all later levels are
    # standard with an interior stop
    cert_constant_geometric: float  # C in |xi_n - xi| <= C kappa^{-n}
    cert_constant_log: float  # C in |xi_n - xi| <= C |log(1-t_n)|^{-a}
    causality: dict

    def csv_rows(self):
        for r in self.levels:
            yield (r.n, r.case, abs(r.xi - self.xi_final), r.overshoot,
                   int(r.exhausted))

    def to_json(self, fp) -> None:
        json.dump(
            {
                "levels": [vars(r) for r in self.levels],
                "xi_final": self.xi_final,
                "final_error": self.final_error,
                "n2_observed": self.n2_observed,
                "cert_constant_geometric": self.cert_constant_geometric,
                "cert_constant_log": self.cert_constant_log,
                "causality": self.causality,
            },
            fp,
            sort_keys=True,
        )


def build_representation(target: TargetProcess, path: SamplePath,
                         scheme: PartitionScheme) -> tuple[StepIntegrand, RepresentationTrace]:
    """Run the level loop and return the integrand with its full audit trace.

    The integrand is zero before the first partition point.  Each level
    observes the target at the level's start, dispatches to the standard
    step when the previous level reached its gap (to the backup step
    otherwise), and accumulates the exact block integrals into the running
    value.  No path data beyond the current time is read; the audit log
    substantiates that claim per level.
    """
    audit = CausalityAudit()
    t = scheme.t
    xi0 = target.value(float(t[0]), audit)
    v = 0.0
    prev_completed = v == xi0
    blocks: list[Block] = []
    records: list[LevelRecord] = []
    xis = []
    for n in range(1, scheme.n_max + 1):
        t_n = float(t[n])
        xi_n = target.value(t_n, audit)
        xis.append(xi_n)
        gap = xi_n - v
        if prev_completed:
            case = 2
            out = case2_step(n, path, scheme, gap)
        else:
            case = 1
            out = case1_step(n, path, scheme, gap)
        audit.access(float(t[n + 1]), out.data_horizon)
        v_end = v + out.contribution
        records.append(
            LevelRecord(n, case, xi_n, v, v_end, gap, out.stop_index,
                        abs(v_end - xi_n), out.exhausted)
        )
        blocks.extend(out.blocks)
        v = v_end
        prev_completed = not out.exhausted

    xi = target.value(1.0, audit)
    n2 = None
    for start in range(1, scheme.n_max + 1):
        tail = records[start - 1 :]
        if all(r.case == 2 and not r.exhausted for r in tail):
            n2 = start
            break
    errs = np.array([abs(x - xi) for x in xis])
    ns = np.arange(1, scheme.n_max + 1)
    cert_geo = float(np.max(errs * scheme.kappa**ns))
    with np.errstate(over="ignore"):
        cert_log = float(np.max(errs * scheme.u[1:-1] ** target.log_holder_a)) \
            if np.isfinite(target.log_holder_a) else 0.0
    trace = RepresentationTrace(
        tuple(records), xi, abs(v - xi), n2, cert_geo, cert_log, audit.digest()
    )
    return StepIntegrand(tuple(blocks)), trace


# ---------------------------------------------------------------------------
# tail diagnostics


def tail_weighted_norm_diagnostic(
    psi: StepIntegrand,
    path: SamplePath,
    scheme: PartitionScheme,
    alpha,
    mu: float,
    depth: int = 8,
) -> np.ndarray:
    """Weighted L1 norms of the left derivative of psi on [t_N, 1], N = 2..n_max-2.

    The weight is (1-x)^{H+alpha-1} |log(1-x)|^mu with mu inside the
    admissible window for (kappa, a); the sequence is expected to decay.
    """
    from .fraccalc import _d_left_many  # local import to avoid cycle at import time

    al = as_frac_order(alpha).require_window(scheme.hurst)
    lo_mu, hi_mu = mu_window(scheme.kappa, scheme.a)
    if not lo_mu < mu < hi_mu:
        raise ParameterError(f"mu must lie in ({lo_mu}, {hi_mu:.6g}), got {mu}")
    h = scheme.hurst.value
    weight = LogWeight(h + al - 1.0, mu)
    sf = psi.sample_on(path)
    umax = min(-math.log(scheme.lag_floor), float(path.grid.u[-1]))
    out = []
    n_nodes = 1 << depth
    for N in range(2, scheme.n_max - 1):
        t_N = float(scheme.t[N])
        u_N = float(scheme.u[N])
        sig = (np.arange(n_nodes) + 0.5) / n_nodes
        u = u_N + (umax - u_N) * sig**2
        du = (umax - u_N) * 2.0 * sig / n_nodes
        xs = -np.expm1(-u)
        dvals = np.abs(_d_left_many(sf, al, t_N, xs))
        out.append(float(np.sum(du * dvals * weight.of_u(u) * np.exp(-u))))
    return np.array(out)
