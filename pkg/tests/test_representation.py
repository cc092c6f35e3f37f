import io
import json
import math

import numpy as np
import pytest

from fbmlab import (
    CausalityAudit,
    CovarianceModel,
    HurstParam,
    ParameterError,
    ResolutionError,
    SamplePath,
    TimeGrid,
    build_partition,
    build_representation,
    case1_step,
    case2_step,
    construction_grid,
    mu_window,
    sample_fbm,
    tail_weighted_norm_diagnostic,
    target_constant,
    target_lipschitz,
    target_log_holder,
    wiener_target_grid,
)


class TestPartition:
    def test_first_point_closed_form(self):
        s = build_partition(3.0, 2.0, 5, 0.7)
        assert s.t[1] == pytest.approx(1.0 - math.exp(-math.sqrt(3.0)), rel=1e-14)

    def test_gap_ratio_bounded(self, scheme):
        # (1 - t_n) <= C Delta_n with a modest constant at these parameters
        assert scheme.max_gap_ratio <= 10.0

    def test_parameter_windows(self):
        with pytest.raises(ParameterError):
            build_partition(2.0, 1.0, 5, 0.7)  # a must exceed 1
        with pytest.raises(ParameterError):
            build_partition(5.0, 2.0, 5, 0.7)  # kappa >= 2^a
        with pytest.raises(ParameterError):
            build_partition(1.9, 3.0, 5, 0.7)  # kappa <= 2
        with pytest.raises(ParameterError):
            build_partition(2.2, 3.0, 5, 0.5)  # needs long memory

    def test_mesh_floor(self):
        with pytest.raises(ResolutionError):
            build_partition(2.2, 3.0, 25, 0.7)

    def test_level_table_consistency(self, scheme):
        for lv in scheme.levels:
            assert lv.sub_t[0] == scheme.t[lv.n]
            assert lv.sub_t[-1] == scheme.t[lv.n + 1]
            assert len(lv.sub_t) == lv.n + 1
            assert lv.coeff == pytest.approx(
                2.0 ** (-lv.n + 3) * lv.mesh ** (-1.4) / lv.n, rel=1e-12
            )

    def test_mu_window_value(self):
        lo, hi = mu_window(2.2, 3.0)
        assert lo == 0.5
        assert hi == pytest.approx(3.0 * math.log(2.0) / math.log(2.2) - 0.5, rel=1e-14)
        with pytest.raises(ParameterError):
            mu_window(8.0, 3.0)  # kappa = 2^a: empty window


class TestConstructionGrid:
    def test_small_case_contains_level_points(self):
        s = build_partition(2.2, 3.0, 2, 0.7)
        g = construction_grid(s, block_refine=0, include_unit=False)
        expected = [0.0, s.t[1], s.t[2], s.level(2).sub_t[1], s.t[3]]
        for x in expected:
            g.index_of(x)  # raises if missing

    def test_size_matches_independent_union(self, scheme, cgrid):
        # recount: {0, t_0, 1} plus every sub-block boundary, backup
        # boundary, and three interior refinement points per sub-block
        # (backup boundaries collide with sub-points at even levels)
        pts = [0.0, float(scheme.t[0]), 1.0]
        for lv in scheme.levels:
            pts.extend(lv.sub_t)
            pts.extend(lv.reserve_t)
            for k in range(lv.n):
                step = (lv.sub_t[k + 1] - lv.sub_t[k]) / 4.0
                pts.extend(lv.sub_t[k] + step * np.arange(1, 4))
        want = len(np.unique(np.round(np.asarray(pts), 15)))
        assert abs(len(cgrid) - want) <= 2  # rounding may merge two duplicates

    def test_strictly_increasing_min_gap(self, scheme):
        g = construction_grid(scheme, block_refine=0, include_unit=False)
        gaps = np.diff(g.t)
        assert np.all(gaps > 0)
        # without refinement points the smallest spacing is set by the
        # deepest backup boundary, itself no finer than the lag floor
        assert gaps.min() >= scheme.lag_floor * 0.5


class TestTargets:
    def test_identity_target_reads_path(self, fbm_path, scheme):
        tgt = target_lipschitz(lambda x: x, fbm_path)
        audit = CausalityAudit()
        for n in (1, 4, 9):
            t_n = float(scheme.t[n])
            assert tgt.value(t_n, audit) == fbm_path.value_at(t_n)
        assert audit.ok

    def test_zero_map_gives_constant_target(self, fbm_path, scheme):
        tgt = target_lipschitz(lambda x: 0.0, fbm_path)
        assert tgt.value(float(scheme.t[3])) == 0.0

    def test_lipschitz_certificate_bound(self, fbm_path, scheme, model):
        # |Z(1) - Z(t_n)| for Z = B stays under the path's own modulus bound
        from fbmlab import modulus_statistic

        k = modulus_statistic(fbm_path, max_lag=0.5)
        tgt = target_lipschitz(lambda x: x, fbm_path)
        z1 = tgt.value(1.0)
        for n in range(3, scheme.n_max + 1):
            t_n = float(scheme.t[n])
            lag = math.exp(-scheme.u[n])
            bound = k * lag**0.7 * math.sqrt(abs(math.log(lag)))
            assert abs(z1 - tgt.value(t_n)) <= bound + 1e-12


@pytest.fixture(scope="module")
def wgrid(scheme):
    return wiener_target_grid(scheme)


class TestWienerTarget:

    def test_tail_variance_closed_form(self, scheme, wgrid, model):
        # Var(Z(1) - Z(t)) = |log(1-t)|^{1-2d} / (2d - 1): 1/192 at u = 4, d = 2
        d = 2.0
        u_t = 4.0
        want = u_t ** (1.0 - 2 * d) / (2 * d - 1.0)
        assert want == pytest.approx(1.0 / 192.0, rel=1e-12)
        t_star = -math.expm1(-u_t)
        i_star = int(np.searchsorted(wgrid.t, t_star))
        t_star = float(wgrid.t[i_star])
        u_star = float(wgrid.u[i_star])
        diffs = []
        for seed in range(400):
            w = sample_fbm(0.5, wgrid, seed, model)
            tgt = target_log_holder(d, w, scheme)
            diffs.append(tgt.value(1.0) - tgt.value(t_star))
        var = np.var(diffs)
        want_star = u_star ** (1.0 - 2 * d) / (2 * d - 1.0)
        # variance of a 400-sample variance estimate: ~sqrt(2/400) = 7% rel
        assert var == pytest.approx(want_star, rel=0.25)

    def test_large_decay_exponent_kills_target(self, scheme, wgrid, model):
        d = 12.0
        sd = math.sqrt(math.log(2.0) ** (1 - 2 * d) / (2 * d - 1))
        for seed in range(20):
            w = sample_fbm(0.5, wgrid, seed, model)
            tgt = target_log_holder(d, w, scheme)
            assert abs(tgt.value(1.0)) <= 6 * sd

    def test_log_decay_statistic_bounded(self, scheme, wgrid, model):
        # |Z(1) - Z(t_n)| |log(1-t_n)|^{d - 1/2 - eps} stays bounded
        d, eps = 2.0, 0.1
        stats = []
        for seed in range(100):
            w = sample_fbm(0.5, wgrid, seed, model)
            tgt = target_log_holder(d, w, scheme)
            z1 = tgt.value(1.0)
            stats.append(
                max(
                    abs(z1 - tgt.value(float(scheme.t[n])))
                    * float(scheme.u[n]) ** (d - 0.5 - eps)
                    for n in range(1, scheme.n_max + 1)
                )
            )
        norm = math.sqrt(2 * d - 1.0)
        assert np.median(stats) <= 0.6 / norm * 3
        assert max(stats) <= 8.0 / norm

    def test_d_must_exceed_one(self, scheme, wgrid, model):
        w = sample_fbm(0.5, wgrid, 0, model)
        with pytest.raises(ParameterError):
            target_log_holder(1.0, w, scheme)


def _synthetic_path(scheme, cgrid, level, block_values):
    """Path with prescribed values at the sub-block boundaries of a level."""
    vals = np.zeros(len(cgrid))
    lv = scheme.level(level)
    for k, bv in enumerate(block_values):
        idx = cgrid.index_of(float(lv.sub_t[k]))
        vals[idx] = bv
    return SamplePath(cgrid, vals, HurstParam(0.7), -1)


class TestCaseSteps:
    def test_zero_gap_stops_immediately(self, scheme, fbm_path):
        for step in (case1_step, case2_step):
            out = step(4, fbm_path, scheme, 0.0)
            assert out.contribution == 0.0
            assert out.stop_index == 0
            assert not out.exhausted
            assert out.blocks == ()

    def test_hand_computed_stop(self, scheme, cgrid):
        # unit sub-increments and a coefficient making each block add 0.3:
        # a gap of 0.5 stops after two blocks with overshoot 0.1
        path = _synthetic_path(scheme, cgrid, 4, [0.0, 1.0, 2.0, 3.0, 4.0])
        out = case2_step(4, path, scheme, 0.5, coeff=0.6)
        assert out.stop_index == 2
        assert out.contribution == pytest.approx(0.6)
        assert out.overshoot == pytest.approx(0.1)
        assert not out.exhausted
        assert len(out.blocks) == 2

    def test_sign_follows_gap(self, scheme, cgrid):
        path = _synthetic_path(scheme, cgrid, 4, [0.0, 1.0, 2.0, 3.0, 4.0])
        out = case2_step(4, path, scheme, -0.5, coeff=0.6)
        assert out.contribution == pytest.approx(-0.6)
        assert all(b.sign == -1.0 for b in out.blocks)

    def test_exhaustion_reported_not_raised(self, scheme, cgrid):
        path = _synthetic_path(scheme, cgrid, 4, [0.0, 1.0, 2.0, 3.0, 4.0])
        out = case2_step(4, path, scheme, 100.0, coeff=0.6)
        assert out.exhausted
        assert out.stop_index == 4
        assert out.contribution == pytest.approx(4 * 0.3)  # 0.6/2 per block
        assert out.overshoot == pytest.approx(100.0 - 1.2)

    def test_backup_first_block_mean_is_gap(self, scheme, cgrid):
        # a first backup increment of exactly length^H makes the first
        # block contribute the gap itself: stop at block one, no overshoot
        lv = scheme.level(4)
        gap = 0.37
        ell = float(lv.reserve_t[0]) - lv.t_lo
        vals = np.zeros(len(cgrid))
        vals[cgrid.index_of(float(lv.reserve_t[0]))] = ell**0.7
        path = SamplePath(cgrid, np.cumsum(vals), HurstParam(0.7), -1)
        out = case1_step(4, path, scheme, gap)
        assert out.stop_index == 1
        assert out.contribution == pytest.approx(gap, rel=1e-12)
        assert out.overshoot == pytest.approx(0.0, abs=1e-15)

    def test_backup_exhaustion_rare(self, scheme, cgrid, model):
        # across one thousand seeds the backup step at level 3 essentially
        # always reaches a typical gap within its reserve blocks
        n_exhausted = 0
        for seed in range(1000):
            path = sample_fbm(0.7, cgrid, seed, model)
            out = case1_step(3, path, scheme, 0.1)
            n_exhausted += out.exhausted
        assert n_exhausted / 1000 <= 0.01

    def test_standard_exhaustion_within_analytic_bound(self, scheme, cgrid, model):
        # at a gap of 2^{-n+1} the standard level misses exactly when the
        # standardized squared sub-increments sum below n/2; the Monte Carlo
        # frequency must stay under the quadratic-form bound at x = n/2
        from fbmlab import autocovariance_rho, gaussian_small_dev_bound

        n = 8
        gap = 2.0 ** (-n + 1)
        freq = 0
        n_seeds = 2000
        for seed in range(n_seeds):
            path = sample_fbm(0.7, cgrid, seed, model)
            out = case2_step(n, path, scheme, gap)
            freq += out.exhausted
        m = np.abs(np.subtract.outer(np.arange(n), np.arange(n))).astype(float)
        cov = autocovariance_rho(m, 0.7)
        bound = gaussian_small_dev_bound(n / 2.0, cov)
        assert freq / n_seeds <= bound


class TestBuildRepresentation:
    def test_zero_target(self, scheme, fbm_path):
        psi, tr = build_representation(target_constant(0.0), fbm_path, scheme)
        assert psi.blocks == ()
        assert tr.final_error == 0.0
        assert all(r.case == 2 and r.stop_index == 0 for r in tr.levels)
        assert tr.n2_observed == 1
        assert tr.causality["ok"]

    def test_deterministic(self, scheme, cgrid, model):
        def run():
            path = sample_fbm(0.7, cgrid, 77, model)
            tgt = target_lipschitz(lambda x: x, path)
            return build_representation(tgt, path, scheme)

        p1, t1 = run()
        p2, t2 = run()
        assert p1 == p2
        assert t1.levels == t2.levels and t1.final_error == t2.final_error

    def test_error_identity_and_causality(self, scheme, cgrid, model):
        for seed in range(10):
            path = sample_fbm(0.7, cgrid, seed, model)
            tgt = target_lipschitz(lambda x: x, path)
            _, tr = build_representation(tgt, path, scheme)
            by_n = {r.n: r for r in tr.levels}
            lhs = abs(by_n[scheme.n_max].v_start - tr.xi_final)
            rhs = abs(by_n[scheme.n_max - 1].xi - tr.xi_final) + sum(
                r.overshoot for r in tr.levels
            )
            assert lhs <= rhs + 1e-12
            assert tr.causality["ok"]

    def test_overshoot_bounded_by_last_block_gain(self, scheme, cgrid, model):
        for seed in range(10):
            path = sample_fbm(0.7, cgrid, seed, model)
            tgt = target_lipschitz(lambda x: x, path)
            _, tr = build_representation(tgt, path, scheme)
            for r in tr.levels:
                if r.case != 2 or r.exhausted or r.stop_index == 0:
                    continue
                lv = scheme.level(r.n)
                inc = np.diff([path.value_at(t) for t in lv.sub_t])
                cap = 0.5 * lv.coeff * np.max(inc**2)
                assert r.overshoot <= cap + 1e-12

    def test_block_scaling_identity(self, scheme, cgrid, model):
        # inside an active standard block, psi(t) / (B(t) - B(s_k)) is the
        # signed level coefficient
        path = sample_fbm(0.7, cgrid, 3, model)
        tgt = target_lipschitz(lambda x: x, path)
        psi, tr = build_representation(tgt, path, scheme)
        sf = psi.sample_on(path)
        for b in psi.blocks:
            if b.kind != "standard":
                continue
            inside = (cgrid.t > b.t_start) & (cgrid.t < b.t_end)
            for t in cgrid.t[inside][:3]:
                db = path.value_at(t) - path.value_at(b.t_start)
                if abs(db) < 1e-12:
                    continue
                ratio = sf(t) / db
                assert ratio == pytest.approx(b.sign * b.coeff, rel=1e-9)

    def test_certificate_fit_dominates_gaps(self, scheme, cgrid, model):
        path = sample_fbm(0.7, cgrid, 8, model)
        tgt = target_lipschitz(lambda x: x, path)
        _, tr = build_representation(tgt, path, scheme)
        c = tr.cert_constant_geometric
        for r in tr.levels:
            assert abs(r.xi - tr.xi_final) <= c * scheme.kappa ** (-r.n) + 1e-12

    def test_trace_json_and_csv(self, scheme, fbm_path):
        tgt = target_lipschitz(lambda x: x, fbm_path)
        _, tr = build_representation(tgt, fbm_path, scheme)
        buf = io.StringIO()
        tr.to_json(buf)
        obj = json.loads(buf.getvalue())
        assert len(obj["levels"]) == scheme.n_max
        assert obj["causality"]["ok"] is True
        rows = list(tr.csv_rows())
        assert len(rows) == scheme.n_max
        assert all(len(r) == 5 for r in rows)


class TestTailDiagnostic:
    def test_zero_integrand_gives_zeros(self, scheme, fbm_path):
        psi, _ = build_representation(target_constant(0.0), fbm_path, scheme)
        seq = tail_weighted_norm_diagnostic(psi, fbm_path, scheme, 0.35, 1.0)
        assert np.array_equal(seq, np.zeros(scheme.n_max - 3))

    def test_norms_positive_for_built_integrand(self, scheme, fbm_path):
        tgt = target_lipschitz(lambda x: x, fbm_path)
        psi, _ = build_representation(tgt, fbm_path, scheme)
        seq = tail_weighted_norm_diagnostic(psi, fbm_path, scheme, 0.35, 1.0)
        assert len(seq) == scheme.n_max - 3
        assert np.all(seq > 0)

    def test_exponent_window_enforced(self, scheme, fbm_path):
        psi, _ = build_representation(target_constant(0.0), fbm_path, scheme)
        with pytest.raises(ParameterError):
            tail_weighted_norm_diagnostic(psi, fbm_path, scheme, 0.35, 2.5)
        with pytest.raises(ParameterError):
            tail_weighted_norm_diagnostic(psi, fbm_path, scheme, 0.25, 1.0)
