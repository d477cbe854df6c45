"""Monte Carlo harness: exact synthesis, SRSWOR draws, replication reports."""

import math

import numpy as np
import pytest

import stratmean as sm
from stratmean import EstimatorKind as K
from stratmean.errors import (
    DegenerateStratum,
    InfeasibleMoments,
    NonPositiveCount,
    SampleExceedsStratum,
)


@pytest.fixture(scope="module")
def pop1(ds1):
    return sm.synthesize_population(ds1, seed=42)


class TestSynthesize:
    def test_roundtrip_exact(self, ds1, pop1):
        """Recomputed summaries equal the targets within 1e-9 relative."""
        recovered = pop1.design(ds1.sample_sizes)
        for target, got in zip(ds1.strata, recovered.strata):
            assert got.mean_y == pytest.approx(target.mean_y, rel=1e-9)
            assert got.mean_x == pytest.approx(target.mean_x, rel=1e-9)
            assert got.var_y == pytest.approx(target.var_y, rel=1e-9)
            assert got.var_x == pytest.approx(target.var_x, rel=1e-9)
            assert got.cov_xy == pytest.approx(target.cov_xy, rel=1e-9)
            assert got.N == target.N

    def test_single_target_stratum_moment_match(self):
        # the first cane-juice stratum on its own: var_y target 80 recovered
        target = sm.StratumSummary.from_correlation(
            1, N=6, n=3, mean_y=135.0, mean_x=366.666, var_y=80.0, var_x=2706.666,
            rho=0.9455626,
        )
        pop = sm.synthesize_population(sm.DesignSummary((target,)), seed=1)
        got = sm.summarize_stratum(pop.strata[0], 3)
        assert got.var_y == pytest.approx(80.0, rel=1e-9)

    def test_perfect_correlation_is_affine(self):
        target = sm.StratumSummary.from_correlation(
            1, N=8, n=3, mean_y=10.0, mean_x=20.0, var_y=4.0, var_x=9.0, rho=1.0
        )
        pop = sm.synthesize_population(sm.DesignSummary((target,)), seed=3)
        y, x = pop.strata[0].y, pop.strata[0].x
        # x must be an exact affine image of y with slope sd_x/sd_y = 1.5
        np.testing.assert_allclose(x, 20.0 + 1.5 * (y - 10.0), rtol=1e-12)
        got = sm.summarize_stratum(pop.strata[0], 3)
        assert got.rho == pytest.approx(1.0, rel=1e-12)

    def test_same_seed_bit_identical(self, ds1):
        a = sm.synthesize_population(ds1, seed=7)
        b = sm.synthesize_population(ds1, seed=7)
        for sa, sb in zip(a.strata, b.strata):
            assert np.array_equal(sa.y, sb.y)
            assert np.array_equal(sa.x, sb.x)

    def test_zero_variance_targets(self):
        target = sm.StratumSummary(1, N=5, n=2, mean_y=3.0, mean_x=4.0, var_y=0.0, var_x=2.0, cov_xy=0.0)
        pop = sm.synthesize_population(sm.DesignSummary((target,)), seed=2)
        assert np.all(pop.strata[0].y == 3.0)
        got = sm.summarize_stratum(pop.strata[0], 2)
        assert got.var_x == pytest.approx(2.0, rel=1e-12)

    def test_degenerate_population(self):
        target = sm.StratumSummary(1, N=2, n=1, mean_y=1.0, mean_x=1.0, var_y=1.0, var_x=1.0, cov_xy=0.0)
        with pytest.raises(DegenerateStratum):
            sm.synthesize_population(sm.DesignSummary((target,)), seed=0)

    def test_infeasible_correlation(self):
        target = sm.StratumSummary(1, N=6, n=3, mean_y=1.0, mean_x=1.0, var_y=1.0, var_x=1.0, cov_xy=1.5)
        with pytest.raises(InfeasibleMoments):
            sm.synthesize_population(sm.DesignSummary((target,)), seed=0)


class TestDraw:
    def test_census_draw_recovers_population_means(self, pop1):
        stats = sm.draw_stratified_srswor(pop1, pop1.sizes, seed=0)
        d = pop1.design(pop1.sizes)
        m = sm.aggregate_moments(d)
        assert stats.ybar_st == pytest.approx(m.mean_y, rel=1e-12)
        assert stats.xbar_st == pytest.approx(m.mean_x, rel=1e-12)

    def test_single_unit_draw(self, pop1):
        stats = sm.draw_stratified_srswor(pop1, (1, 1, 1), seed=5)
        weights = pop1.weights
        expected = sum(w * v for w, v in zip(weights, stats.stratum_ybars))
        assert stats.ybar_st == pytest.approx(expected, rel=1e-12)

    def test_bad_sample_sizes(self, pop1):
        with pytest.raises(SampleExceedsStratum):
            sm.draw_stratified_srswor(pop1, (7, 4, 3), seed=0)
        with pytest.raises(NonPositiveCount):
            sm.draw_stratified_srswor(pop1, (0, 4, 3), seed=0)

    def test_mean_deviations_center_on_zero(self, ds1, pop1):
        """e0 and e1 average to ~0 over replications (3 MC SE band)."""
        d = pop1.design(ds1.sample_sizes)
        m = sm.aggregate_moments(d)
        rng = np.random.default_rng(12)
        devs = [
            sm.RelativeDeviations.from_sample(
                sm.draw_stratified_srswor(pop1, ds1.sample_sizes, rng), m.mean_y, m.mean_x
            )
            for _ in range(4000)
        ]
        e0 = np.array([dv.e0 for dv in devs])
        e1 = np.array([dv.e1 for dv in devs])
        for e in (e0, e1):
            assert abs(e.mean()) <= 3.0 * e.std(ddof=1) / math.sqrt(e.size)


class TestEnumeration:
    def test_count(self, pop1, ds1):
        assert sm.enumeration_count(pop1, ds1.sample_sizes) == (
            math.comb(6, 3) * math.comb(12, 4) * math.comb(7, 3)
        )

    def test_exact_variance_identity(self, ds1, pop1):
        """Enumerated variance of ybar_st equals the weighted-sum formula."""
        exact = sm.enumerate_exact_moments(pop1, ds1.sample_sizes)
        m = sm.aggregate_moments(pop1.design(ds1.sample_sizes))
        assert exact.var_ybar == pytest.approx(m.var_ybar, rel=1e-9)
        assert exact.var_xbar == pytest.approx(m.var_xbar, rel=1e-9)
        assert exact.cov_xybar == pytest.approx(m.cov_xybar, rel=1e-9)
        assert exact.mean_y == pytest.approx(m.mean_y, rel=1e-12)

    def test_limit_enforced(self, pop1, ds1):
        with pytest.raises(ValueError):
            sm.enumerate_exact_moments(pop1, ds1.sample_sizes, limit=100)


@pytest.fixture(scope="module")
def report(ds1, pop1):
    specs = [
        sm.EstimatorSpec(K.UNBIASED),
        sm.EstimatorSpec(K.T1, sm.ShapeParams(w=1.0)),
        sm.EstimatorSpec(K.T6),
    ]
    return sm.replicate(pop1, ds1.sample_sizes, specs, reps=20_000, seed=3)


class TestReplicate:
    def test_unbiased_bias_near_zero(self, report):
        row = report.rows[0]
        assert abs(row.empirical_bias) <= 3.0 * row.se_bias

    def test_unbiased_mse_matches_variance(self, report):
        row = report.rows[0]
        assert row.verdict == "ok"
        assert abs(row.empirical_mse - row.theoretical_mse) <= max(
            3.0 * row.se_mse, 0.05 * row.theoretical_mse
        )

    def test_t1_linear_case_agrees(self, report):
        row = report.rows[1]
        assert row.verdict == "ok"

    def test_t6_resolved_constants_recorded(self, report):
        row = report.rows[2]
        assert set(row.constants) == {"p", "a", "b", "k1", "k2"}
        assert row.verdict == "ok"

    def test_mse_bounds_bias_squared(self, report):
        for row in report.rows:
            assert row.empirical_mse >= row.empirical_bias**2

    def test_deterministic_across_workers(self, ds1, pop1):
        specs = [sm.EstimatorSpec(K.COMBINED_RATIO)]
        a = sm.replicate(pop1, ds1.sample_sizes, specs, reps=6000, seed=3, workers=1)
        b = sm.replicate(pop1, ds1.sample_sizes, specs, reps=6000, seed=3, workers=4)
        assert a == b

    def test_deterministic_across_runs(self, ds1, pop1):
        specs = [sm.EstimatorSpec(K.T5)]
        a = sm.replicate(pop1, ds1.sample_sizes, specs, reps=3000, seed=11)
        b = sm.replicate(pop1, ds1.sample_sizes, specs, reps=3000, seed=11)
        assert a == b

    def test_insufficient_reps_verdict(self, ds1, pop1):
        report = sm.replicate(
            pop1, ds1.sample_sizes, [sm.EstimatorSpec(K.UNBIASED)], reps=100, seed=1
        )
        assert report.rows[0].verdict == "insufficient-replications"
        assert not report.all_ok

    def test_optimal_t6_beats_ratio_empirically(self, ds1, pop1):
        specs = [sm.EstimatorSpec(K.COMBINED_RATIO), sm.EstimatorSpec(K.T6)]
        report = sm.replicate(pop1, ds1.sample_sizes, specs, reps=20_000, seed=3)
        ratio_row, t6_row = report.rows
        assert t6_row.empirical_mse <= ratio_row.empirical_mse + 3.0 * ratio_row.se_mse

    def test_estimator_errors_counted_not_fatal(self, ds1):
        # a population with negative x values makes fractional powers fail
        # on some draws; those draws are tallied, not raised
        strata = (
            sm.StratumSummary(1, N=8, n=2, mean_y=10.0, mean_x=0.5, var_y=1.0, var_x=4.0, cov_xy=0.0),
        )
        pop = sm.synthesize_population(sm.DesignSummary(strata), seed=4)
        report = sm.replicate(
            pop, (2,), [sm.EstimatorSpec(K.T1, sm.ShapeParams(w=0.5))], reps=1000, seed=2
        )
        row = report.rows[0]
        assert row.error_counts.get("non-positive-base", 0) > 0
        assert row.valid + sum(row.error_counts.values()) == row.reps
