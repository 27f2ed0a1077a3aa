import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from strategies import positive_chains, symbol_seqs
from markov_cusum.errors import InadmissibleDelta, SupportViolation, TrainingTooShort
from markov_cusum.estimation import (beta_bound, coverage_check, deviations,
                                     epsilon0_estimate, f_n_expansion, f_n_path, f_n_ratio,
                                     fit, seq_log2_prob, within_deviation)
from markov_cusum.markov_core import MarkovModel


def direct_log2(est, x):
    """Plug-in product built from raw counts of the training string."""
    p = est.initial_law[x[0]]
    for a, b in zip(x, x[1:]):
        p *= est.transitions[a, b]
    return math.log2(p) if p > 0 else -math.inf


class TestFit:
    def test_alternating(self):
        est = fit([0, 1, 0, 1, 0])
        assert est.marginal(0) == pytest.approx(3 / 5)
        assert est.conditional(1, 0) == 1.0
        assert est.conditional(0, 1) == 1.0

    def test_counts_consistent(self):
        x = [0, 0, 1, 1, 1, 0, 1]
        est = fit(x)
        assert est.pair_counts.tolist() == [[1, 2], [1, 2]]
        assert est.symbol_counts.tolist() == [3, 4]
        assert est.n0 == 7

    def test_too_short(self):
        with pytest.raises(TrainingTooShort):
            fit([0])
        with pytest.raises(TrainingTooShort):
            fit([0, 1], order=2)

    def test_symbols_outside_alphabet(self):
        with pytest.raises(ValueError):
            fit([0, 1, 2], n_symbols=2)

    def test_unseen_context_row_is_zero(self):
        est = fit([0, 0, 0, 0])
        assert est.transitions[1].tolist() == [0.0, 0.0]
        assert not est.covered_contexts[1]

    def test_order_two(self):
        x = [0, 1, 1, 0, 1, 1, 0]
        est = fit(x, 2, order=2)
        # contexts 01 -> 1 (twice), 11 -> 0 (twice), 10 -> 1 (once)
        assert est.conditional(1, 0b01) == 1.0
        assert est.conditional(0, 0b11) == 1.0
        assert est.marginal(0b01) == pytest.approx(2 / 6)

    def test_smoothing(self):
        est = fit([0, 0, 0, 0], smoothing=1.0)
        assert est.transitions[1].tolist() == [0.5, 0.5]
        assert est.conditional(1, 0) == pytest.approx(1 / 5)

    def test_converges(self, mu0):
        est = fit(mu0.sample(1_000_000, 3))
        cond, marg = deviations(est, mu0)
        assert cond < 0.005 and marg < 0.005


class TestCoverage:
    def test_missing_symbol(self, mu0):
        rep = coverage_check(fit([0, 0, 0, 0]), mu0)
        assert rep.missing_symbols == (1,)
        assert (1, 0) in rep.missing_pairs and (1, 1) in rep.missing_pairs
        assert not rep.covered

    def test_missing_pair_only(self, mu0):
        rep = coverage_check(fit([0, 0, 1, 1, 0]), mu0)
        assert rep.covered
        rep = coverage_check(fit([0, 1, 1, 1]), mu0)
        assert rep.missing_pairs == ((0, 0), (1, 0))
        assert rep.missing_symbols == ()

    def test_zero_in_reference_not_required(self):
        ref = MarkovModel([[0.5, 0.5], [1.0, 0.0]])
        assert coverage_check(fit([0, 0, 1, 0, 1]), ref).covered


class TestSequenceProbability:
    def test_examples(self):
        est = fit([0, 1, 0, 1, 0])
        assert seq_log2_prob(est, [0]) == pytest.approx(math.log2(0.6))
        assert seq_log2_prob(est, [1]) == pytest.approx(math.log2(0.4))
        assert seq_log2_prob(est, [0, 0]) == -math.inf
        assert seq_log2_prob(est, [0, 1, 0]) == pytest.approx(math.log2(0.6))

    @given(symbol_seqs(2, 2, 40), symbol_seqs(2, 1, 12))
    def test_matches_direct_product(self, train, x):
        est = fit(train, 2)
        assert seq_log2_prob(est, x) == pytest.approx(direct_log2(est, x), abs=1e-9)

    def test_exhaustive_probabilities_sum_to_one(self):
        est = fit([0, 0, 1, 0, 1, 1, 1, 0, 0])
        for n in (1, 3, 6):
            total = sum(2 ** seq_log2_prob(est, x) for x in itertools.product((0, 1), repeat=n))
            assert total == pytest.approx(1.0, abs=1e-12)


class TestFn:
    def test_zero_when_estimate_equals_model(self):
        est = fit([0, 1, 1, 0, 0, 1, 0, 1, 1, 0])
        x = [0, 1, 1, 0, 1]
        model = MarkovModel(est.transitions, initial_law=est.initial_law)
        assert f_n_ratio(model, est, x) == pytest.approx(0.0, abs=1e-15)

    @given(positive_chains(n_symbols=st.just(2)), symbol_seqs(2, 1, 60))
    def test_expansion_matches_direct(self, model, x):
        est = fit([0, 0, 1, 1, 0, 1, 0, 0, 1, 1, 1, 0], 2)
        direct = (model.log2_prob(x) - est.log2_prob(x)) / len(x)
        assert f_n_expansion(model, est, x) == pytest.approx(direct, abs=1e-9)
        assert f_n_ratio(model, est, x) == pytest.approx(direct, abs=1e-9)

    def test_support_violation(self, mu0):
        with pytest.raises(SupportViolation):
            f_n_ratio(mu0, fit([0, 0, 0, 0]), [0, 1])

    def test_path_matches_pointwise(self, mu0):
        est = fit(mu0.sample(5000, 1))
        x = mu0.sample(300, 2)
        path = f_n_path(mu0, est, x)
        for n in (1, 2, 17, 300):
            assert path[n - 1] == pytest.approx(f_n_ratio(mu0, est, x[:n]), abs=1e-12)


class TestBeta:
    def test_zero_deltas(self, mu0):
        b = beta_bound(mu0, 0.0, 0.0)
        assert b.beta == 1.0 and b.log2_beta == 0.0

    def test_hand_computed(self):
        m = MarkovModel([[0.7, 0.3], [0.2, 0.8]])
        assert np.allclose(m.stationary, [0.4, 0.6])
        b = beta_bound(m, 0.1, 0.2)
        assert b.beta_prime == pytest.approx(2.0)
        assert b.beta_double_prime == pytest.approx(2.0)
        assert b.beta == pytest.approx(4.0)

    def test_inadmissible(self, mu0):
        with pytest.raises(InadmissibleDelta):
            beta_bound(mu0, 0.1, 0.01)
        with pytest.raises(InadmissibleDelta):
            beta_bound(mu0, 0.01, 1 / 3)
        with pytest.raises(InadmissibleDelta):
            beta_bound(mu0, -0.01, 0.0)

    @given(st.floats(0, 0.09), st.floats(0, 0.09))
    def test_monotone(self, d1, d2):
        m = MarkovModel([[0.9, 0.1], [0.2, 0.8]])
        lo, hi = sorted((d1, d2))
        assert beta_bound(m, lo, 0.01).beta <= beta_bound(m, hi, 0.01).beta
        assert beta_bound(m, 0.01, lo).beta <= beta_bound(m, 0.01, hi).beta

    @given(symbol_seqs(2, 1, 12))
    def test_bound_holds_on_exhaustive_good_estimates(self, x):
        # any estimate inside the deviation box keeps mu0/mu0_hat <= beta^n
        m = MarkovModel([[0.7, 0.3], [0.2, 0.8]])
        est = fit([0, 0, 1, 1, 1, 0, 1, 1, 0, 0], 2)
        cond, marg = deviations(est, m)
        b = beta_bound(m, min(cond + 1e-9, 0.19), min(marg + 1e-9, 0.39))
        if within_deviation(est, m, b.delta, b.delta_prime):
            assert f_n_ratio(m, est, x) <= b.log2_beta + 1e-12


class TestEpsilon0:
    def test_wide_box_is_zero(self, mu0):
        assert epsilon0_estimate(mu0, 100, 1.0, 1.0, 100, 0).epsilon0 == 0.0

    def test_tiny_training_mostly_bad(self, mu0):
        q = epsilon0_estimate(mu0, 2, 0.01, 0.02, 200, 0)
        assert q.epsilon0 > 0.5

    def test_needs_trials(self, mu0):
        with pytest.raises(ValueError):
            epsilon0_estimate(mu0, 100, 0.1, 0.1, 99, 0)

    def test_decreasing_in_n0(self, mu0):
        small = epsilon0_estimate(mu0, 200, 0.05, 0.1, 300, 1).epsilon0
        large = epsilon0_estimate(mu0, 5000, 0.05, 0.1, 300, 1).epsilon0
        assert large < small

    def test_deterministic(self, mu0):
        a = epsilon0_estimate(mu0, 300, 0.05, 0.1, 100, 9)
        b = epsilon0_estimate(mu0, 300, 0.05, 0.1, 100, 9)
        assert a == b
        assert a.stderr == pytest.approx(math.sqrt(a.epsilon0 * (1 - a.epsilon0) / 100))
