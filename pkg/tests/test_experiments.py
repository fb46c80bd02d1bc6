"""Experiment orchestration tests: engines, determinism, panels, sweeps."""
import io
import math

import pytest

from guesswork_lab import experiments as ex
from guesswork_lab.infotheory import binary_entropy
from guesswork_lab.rates import ScenarioParams


def make_cfg(mode, m=6, n=14, p=0.3, s=0.9, theta=None, trials=600, seed=5, **kw):
    sc = ScenarioParams(s=s, p=p, m=m, n=n, theta=theta)
    return ex.ExperimentConfig(scenario=sc, trials=trials, seed=seed, mode=mode, **kw)


class TestConfigValidation:
    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            make_cfg("sideways")

    def test_minimum_trials(self):
        with pytest.raises(ValueError):
            make_cfg("allocated-online", trials=50)

    def test_sweep_shape(self):
        with pytest.raises(ValueError):
            make_cfg("allocated-online", m_sweep=(8, 10))
        with pytest.raises(ValueError):
            make_cfg("allocated-online", m_sweep=(8, 10, 10))

    def test_biased_needs_theta(self):
        with pytest.raises(ValueError):
            make_cfg("biased-password")


class TestDeterminism:
    def test_same_config_bit_identical(self):
        cfg = make_cfg("allocated-online", trials=400)
        a = ex.run_experiment(cfg)
        b = ex.run_experiment(cfg)
        assert a == b

    def test_worker_count_invariant(self):
        cfg = make_cfg("unallocated-offline", trials=300)
        serial = ex.run_experiment(cfg, workers=1)
        parallel = ex.run_experiment(cfg, workers=3)
        assert serial == parallel


class TestEngineAgreement:
    """The sampled engine must match the literal scanning engine in
    distribution; means are compared by a z-test at matched parameters."""

    @pytest.mark.parametrize(
        "mode,theta",
        [
            ("allocated-online", None),
            ("allocated-offline", None),
            ("unallocated-online", None),
            ("unallocated-offline", None),
            ("no-allocation-keyed", None),
            ("biased-password", 0.15),
        ],
    )
    def test_scan_vs_sampled(self, mode, theta):
        sampled = ex.run_experiment(
            make_cfg(mode, theta=theta, trials=900, seed=31, engine="sampled")
        )
        scanned = ex.run_experiment(
            make_cfg(mode, theta=theta, trials=900, seed=77, engine="scan")
        )
        combined = math.hypot(sampled.half_width_95, scanned.half_width_95) / 1.96
        assert abs(sampled.mean - scanned.mean) <= 3.5 * combined


class TestRunExperiment:
    def test_no_allocation_rate_near_one(self):
        est = ex.run_experiment(make_cfg("no-allocation-keyed", m=8, n=18, trials=4000))
        rate = math.log2(est.mean) / 8
        assert abs(rate - 1.0) <= 0.15

    def test_unbiased_allocated_rate_one_any_s(self):
        for s in (0.6, 0.9):
            est = ex.run_experiment(
                make_cfg("allocated-online", m=8, n=18, p=0.5, s=s, trials=3000)
            )
            assert abs(math.log2(est.mean) / 8 - 1.0) <= 0.1

    def test_failures_zero_at_adequate_width(self):
        for mode in ("allocated-online", "unallocated-offline", "no-allocation-keyed"):
            est = ex.run_experiment(make_cfg(mode, m=8, n=18, trials=2000))
            assert est.failures == 0

    def test_budget_produces_failures_counted_as_zero(self):
        cfg = make_cfg("no-allocation-keyed", m=8, n=18, trials=2000, budget=4)
        est = ex.run_experiment(cfg)
        assert est.failures > 0
        # zero-on-failure pulls the mean below the budget
        assert est.mean < 4

    def test_broken_hash_exact_uniform(self):
        cfg = make_cfg("broken-hash", m=8, n=18, p=0.5, trials=100)
        est = ex.run_experiment(cfg)
        assert est.mean == pytest.approx((2 ** 8 + 1) / 2.0, rel=1e-12)
        assert est.half_width_95 == 0.0

    def test_allocated_matches_exact_theory(self):
        cfg = make_cfg("allocated-online", m=8, n=20, trials=6000)
        est = ex.run_experiment(cfg)
        theory = ex.allocated_theory_log2_mean(8, 20, 0.3, cfg.scenario.user_count())
        assert abs(math.log2(est.mean) - theory) <= 0.1

    def test_trial_log_csv(self):
        buf = io.StringIO()
        cfg = make_cfg("allocated-online", trials=120)
        est = ex.run_experiment(cfg, trial_log=buf)
        lines = buf.getvalue().strip().splitlines()
        assert lines[0] == "trial_seed,user,bin,strategy,guesses,success,arm"
        assert len(lines) == 121
        parts = lines[1].split(",")
        assert len(parts) == 7
        assert parts[3] == "ascending-index"
        assert est.trials == 120


class TestCiCalibration:
    def test_truncated_geometric_coverage(self):
        # single allocated user: the scan outcome is min over the planted
        # position and the natural geometric, with exactly known mean
        m, n, p = 6, 24, 0.3
        prob = p ** m
        size = float(1 << n)
        true_mean = 1.0 / prob - (1.0 - prob) / (size * prob * prob)
        covered = 0
        for run in range(200):
            cfg = make_cfg(
                "allocated-online", m=m, n=n, p=p, s=1.0, trials=150, seed=9000 + run
            )
            est = ex.run_experiment(cfg)
            covered += abs(est.mean - true_mean) <= est.half_width_95
        assert covered >= 180

    def test_accumulator_merge_exact(self):
        from guesswork_lab.attack import GuessAccumulator

        a, b = GuessAccumulator(), GuessAccumulator()
        a.add(5, True)
        a.add(0, False)
        b.add(7, True)
        merged = a.merge(b)
        assert merged.count == 3
        assert merged.total == 12
        assert merged.failures == 1


class TestSweep:
    def test_unbiased_allocated_slope_one(self):
        cfg = make_cfg(
            "allocated-online", m=8, n=18, p=0.5, s=0.7,
            trials=2500, m_sweep=(8, 10, 12),
        )
        result = ex.sweep_rate(cfg)
        assert abs(result.fitted_rate - 1.0) <= 0.05
        assert result.r_squared > 0.999

    def test_points_and_csv_shape(self):
        cfg = make_cfg(
            "no-allocation-keyed", m=6, n=14, trials=400, m_sweep=(6, 8, 10)
        )
        result = ex.sweep_rate(cfg)
        assert [m for m, _ in result.points] == [6, 8, 10]
        lines = result.to_csv().strip().splitlines()
        assert lines[0] == "m,log2_mean,ci"
        assert len(lines) == 4

    def test_fit_line_exact(self):
        slope, intercept, r2 = ex.fit_line([(1, 3.0), (2, 5.0), (3, 7.0)])
        assert slope == pytest.approx(2.0, abs=1e-12)
        assert intercept == pytest.approx(1.0, abs=1e-12)
        assert r2 == pytest.approx(1.0, abs=1e-12)


class TestConcentrationReport:
    def test_bound_holds_everywhere(self):
        cfg = make_cfg("allocated-online", m=10, n=26, trials=20000)
        full = math.log2(1.0 / 0.3)
        rows = ex.concentration_report(cfg, [f * full for f in (0.25, 0.5, 0.8, 1.0)])
        for row in rows:
            assert row.empirical <= row.bound + 3.0 * row.ci / 1.96

    def test_unbiased_matches_exact_geometric_cdf(self):
        cfg = make_cfg("allocated-online", m=10, n=14, p=0.5, s=0.8, trials=20000)
        rows = ex.concentration_report(cfg, [0.5, 0.8, 0.95])
        for row in rows:
            exact = ex.exact_geometric_cdf(10, row.l, 2.0 ** -10)
            sigma = max(row.ci / 1.96, 1e-9)
            assert abs(row.empirical - exact) <= 3.5 * sigma

    def test_l_range_check(self):
        cfg = make_cfg("allocated-online", m=10, n=26, trials=200)
        with pytest.raises(ValueError):
            ex.concentration_report(cfg, [3.0])


class TestMostLikelyPanel:
    def test_modal_type_is_nearest_realizable(self):
        cfg = make_cfg("unallocated-offline", m=10, n=22, trials=4000)
        panel = ex.most_likely_panel(cfg)
        assert panel.modal_weight == panel.nearest_weight == 3
        assert 0.2 <= panel.modal_frequency <= 0.35

    def test_conditional_means_track_theory(self):
        cfg = make_cfg("unallocated-offline", m=10, n=22, trials=6000)
        panel = ex.most_likely_panel(cfg)
        assert abs(math.log2(panel.online_conditional.mean) - panel.online_theory_log2) <= 0.25
        assert abs(math.log2(panel.offline_forced.mean) - panel.offline_theory_log2) <= 0.25
        assert panel.online_theory_log2 == pytest.approx(
            10 * binary_entropy(0.3), abs=1e-12
        )


class TestKeySizePanel:
    def test_reference_rows(self):
        rows = ex.keysize_panel([1.0, 1.5, 2.0])
        assert rows[0].p0 == pytest.approx(0.5, abs=1e-12)
        assert rows[0].ratio == 1.0
        assert rows[1].p0 == pytest.approx(0.1464466094067262, abs=1e-9)
        assert rows[2].p0 == pytest.approx(0.0669872981077807, abs=1e-9)
        for row in rows:
            assert row.roundtrip == pytest.approx(row.alpha, abs=1e-10)
            assert row.storage_ratio == pytest.approx(row.alpha, abs=1e-10)
            assert row.ratio == row.alpha

    def test_key_size_strings(self):
        row = ex.keysize_panel([2.0])[0]
        assert row.uniform_key_bits == "2*m*2^(2*m)"
        assert row.biased_key_bits == "m*2^(2*m)"


class TestWidthHelpers:
    def test_default_width_covers_exponent(self):
        for m in (6, 10, 14):
            n = ex.default_input_width(m, 0.3, 0.9)
            assert n >= 1.25 * m * (math.log2(1 / 0.3) + binary_entropy(0.9)) - 1
            assert n <= 62

    def test_realized_min_type(self):
        assert ex.realized_min_type(10, 0.3, 25) == 0.8
