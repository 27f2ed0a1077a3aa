import math

import numpy as np
import pytest

from markov_cusum.errors import ConfigError, OutsideWindow
from markov_cusum.experiments import (CONTINUATION, E0Point, ExperimentConfig, fit_slope,
                                      prepare, run_delay_sweep, run_e0_check,
                                      run_false_alarm_sweep, run_lorden_estimate,
                                      run_optimality_ratio, stream, write_outputs)
from markov_cusum.fastcusum import run_ctw_cusum

SMALL = dict(n0=20_000, delta=0.002, delta_prime=0.004, eps0_trials=100, seed=3)


class TestConfig:
    @pytest.mark.parametrize("kw", [
        {"trials": 0}, {"lam": 0.1, "theta": 1.0}, {"alphas": (1.5,)},
        {"change_grid": ()}, {"change_point": 0}, {"eps0_trials": 50},
        {"prune": (1.0, 0)}, {"log2_gammas": (-1.0,)}, {"workers": 0},
    ])
    def test_rejected(self, kw):
        with pytest.raises(ConfigError):
            ExperimentConfig(**kw)

    def test_missing_model_file(self, tmp_path):
        with pytest.raises(ConfigError):
            ExperimentConfig(mu0=str(tmp_path / "none.yaml"))

    def test_digest_ignores_workers(self):
        a = ExperimentConfig(alphas=(0.1,), workers=1)
        b = ExperimentConfig(alphas=(0.1,), workers=4, out="x")
        assert a.digest() == b.digest()
        assert a.digest() != ExperimentConfig(alphas=(0.1,), seed=1).digest()

    def test_theta_outside_window(self):
        with pytest.raises(OutsideWindow):
            prepare(ExperimentConfig(theta=0.01, n0=20_000, delta=0.005, delta_prime=0.01,
                                     eps0_trials=0))

    def test_lambda_policy(self):
        s = prepare(ExperimentConfig(**SMALL))
        assert s.lam == pytest.approx(s.window.mid)
        s = prepare(ExperimentConfig(**dict(SMALL, lam=0.15)))
        assert s.lam == 0.15
        s = prepare(ExperimentConfig(**dict(SMALL, theta=1.0)))
        assert s.lam == pytest.approx(s.d1_est - s.d1_true / 2)

    def test_epsilon0_required(self):
        s = prepare(ExperimentConfig(**dict(SMALL, eps0_trials=0)))
        with pytest.raises(ConfigError):
            s.epsilon0


class TestSlope:
    def test_needs_four_points(self):
        with pytest.raises(ConfigError):
            fit_slope([1, 2, 3], [1, 2, 3], 1.0)

    def test_exact_line(self):
        f = fit_slope([1, 2, 3, 4, 5], [3, 5, 7, 9, 11], 2.0)
        assert f.slope == pytest.approx(2.0) and f.intercept == pytest.approx(1.0)
        assert f.relative_error == pytest.approx(0.0, abs=1e-12)
        assert f.ci_low <= 2.0 <= f.ci_high


class TestFalseAlarm:
    def test_rates_below_bound_and_monotone(self):
        cfg = ExperimentConfig(**dict(SMALL, alphas=(1.0, 2 ** -2, 2 ** -4, 2 ** -6),
                                      trials=300, horizon=2000))
        rep = run_false_alarm_sweep(cfg)
        rates = [p.rate for p in rep.points]
        assert rates == sorted(rates, reverse=True)
        for p in rep.points:
            assert p.rate <= p.bound + 3 * p.rate_stderr + 1e-12
        assert rep.points[0].bound == 1.0

    def test_needs_no_change(self):
        with pytest.raises(ConfigError):
            run_false_alarm_sweep(ExperimentConfig(alphas=(0.1,), change_point=5))

    def test_fresh_training_runs(self):
        cfg = ExperimentConfig(**dict(SMALL, n0=2000, alphas=(2 ** -3,), trials=20,
                                      horizon=500, fresh_training=True))
        rep = run_false_alarm_sweep(cfg)
        assert rep.points[0].trials == 20


class TestDelay:
    def test_no_censoring_and_slope(self):
        cfg = ExperimentConfig(**dict(SMALL, alphas=tuple(2.0 ** -k for k in (4, 6, 8, 10)),
                                      trials=100, change_point=1))
        rep = run_delay_sweep(cfg)
        assert all(p.censored_fraction == 0 for p in rep.points)
        delays = [p.mean_delay for p in rep.points]
        assert delays == sorted(delays)
        assert rep.slope is not None and rep.slope.slope > 0

    def test_penalty_near_upper_edge_is_slower(self):
        s = prepare(ExperimentConfig(**SMALL))
        lo, hi = s.window
        base = dict(SMALL, alphas=(2 ** -8,), trials=100, change_point=1, horizon=20_000)
        near_lo = run_delay_sweep(ExperimentConfig(**dict(base, lam=lo + 0.1 * (hi - lo))))
        near_hi = run_delay_sweep(ExperimentConfig(**dict(base, lam=lo + 0.9 * (hi - lo))))
        assert near_hi.points[0].mean_delay > near_lo.points[0].mean_delay

    def test_late_change_delay_counted_from_change(self):
        cfg = ExperimentConfig(**dict(SMALL, alphas=(2 ** -8,), trials=50, change_point=200,
                                      horizon=5000))
        rep = run_delay_sweep(cfg)
        for t in rep.trials:
            if t.stop_time is not None:
                assert t.delay == max(0, t.stop_time - 199)


class TestLorden:
    def _cfg(self, **kw):
        base = dict(SMALL, lam=0.12, log2_gammas=(4.0, 8.0), continuations=20, prefixes=4,
                    horizon=3000, window_penalty=True)
        base.update(kw)
        return ExperimentConfig(**base)

    def test_grid_one_matches_direct_runs(self):
        cfg = self._cfg(change_grid=(1,))
        setup = prepare(cfg)
        rep = run_lorden_estimate(cfg, setup)
        for p in rep.points:
            direct = []
            for j in range(cfg.continuations):
                x = setup.mu1.sample(cfg.horizon, stream(cfg.seed, CONTINUATION, j))
                r = run_ctw_cusum(setup.est, 1, setup.lam, x, p.log2_threshold,
                                  window_penalty=True)
                direct.append(r.stop_time)
            assert p.estimate == pytest.approx(np.mean(direct))

    def test_estimate_dominates_each_change_point(self):
        rep = run_lorden_estimate(self._cfg(change_grid=(1, 50, 100)))
        for p in rep.points:
            assert {m for m, _ in p.per_change_point} == {1, 50, 100}
            assert all(p.estimate >= v - 1e-12 for _, v in p.per_change_point)
            assert p.censored_fraction == 0

    def test_reference_engine_for_lz78(self):
        from markov_cusum.codes import CodecSpec
        cfg = self._cfg(codec=CodecSpec("lz78", 2), change_grid=(1,), continuations=5,
                        horizon=600, log2_gammas=(4.0,))
        rep = run_lorden_estimate(cfg)
        assert rep.points[0].estimate > 0

    def test_gamma_delay_sweep(self):
        cfg = self._cfg(change_grid=(1,), log2_gammas=(2.0, 4.0, 6.0, 8.0))
        rep = run_delay_sweep(cfg)
        assert rep.kind == "lorden" and rep.slope is not None


class TestE0:
    def test_point_logic(self):
        assert E0Point(1.0, 10.0, 1.0, 0.6, 5.0, 100).holds is None
        assert E0Point(1.0, 10.0, 1.0, 0.2, 5.0, 100).holds is True
        assert E0Point(1.0, 4.0, 1.0, 0.2, 5.0, 100).holds is False

    def test_inconclusive_when_mostly_censored(self):
        cfg = ExperimentConfig(**dict(SMALL, lam=0.12, log2_gammas=(40.0,), trials=20,
                                      horizon=200, window_penalty=True))
        rep = run_e0_check(cfg)
        assert not rep.points[0].conclusive and not rep.passed

    def test_small_gammas_hold(self):
        cfg = ExperimentConfig(**dict(SMALL, lam=0.12, log2_gammas=(0.0, 1.0, 2.0),
                                      trials=100, horizon=2000, window_penalty=True))
        rep = run_e0_check(cfg)
        assert rep.passed


class TestOptimality:
    def test_needs_theta(self):
        with pytest.raises(ConfigError):
            run_optimality_ratio(ExperimentConfig(**dict(SMALL, log2_gammas=(8.0,))))

    def test_ratio_points(self):
        cfg = ExperimentConfig(**dict(SMALL, theta=0.5, log2_gammas=(8.0, 16.0),
                                      change_grid=(1,), continuations=10, horizon=2000,
                                      window_penalty=True))
        rep = run_optimality_ratio(cfg)
        assert [p.log2_gamma for p in rep.points] == [8.0, 16.0]
        assert all(p.log2_eta > p.log2_gamma for p in rep.points)
        assert all(p.ratio > 0 for p in rep.points)


class TestReproducibility:
    def _cfg(self, **kw):
        return ExperimentConfig(**dict(SMALL, alphas=(2 ** -2, 2 ** -5), trials=40,
                                       horizon=400, **kw))

    def test_outputs_byte_identical(self, tmp_path):
        for d in ("a", "b"):
            write_outputs("fa", run_false_alarm_sweep(self._cfg()), self._cfg(), tmp_path / d)
        for name in ("fa.csv", "fa_trials.csv", "fa.meta.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_workers_do_not_change_results(self):
        one = run_false_alarm_sweep(self._cfg())
        two = run_false_alarm_sweep(self._cfg(workers=2))
        assert one.trials == two.trials
        assert one.points == two.points

    def test_seed_changes_results(self):
        a = run_false_alarm_sweep(self._cfg())
        b = run_false_alarm_sweep(ExperimentConfig(**dict(SMALL, alphas=(2 ** -2, 2 ** -5),
                                                          trials=40, horizon=400, seed=4)))
        assert a.trials != b.trials
