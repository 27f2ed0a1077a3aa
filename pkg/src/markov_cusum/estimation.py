"""Empirical pre-change estimate built from a training prefix.

The conditional estimate is N(c, a) / sum_a N(c, a), with the denominator
counting context c at positions 1..n0-1, so the sequence probability is an
exact product of the plug-in conditionals times the marginal of the first
context. The marginal is N(c) / (n0 - r + 1) over all n0 - r + 1 windows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .errors import InadmissibleDelta, SupportViolation, TrainingTooShort
from .markov_core import (MarkovModel, SeedLike, _ChainLaw, _check_same_shape,
                          as_generator, context_codes)

FN_AGREEMENT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class EmpiricalMarkovEstimate(_ChainLaw):
    """Counts from a training prefix and the plug-in law they define.

    ``pair_counts[c, a]`` counts context c followed by symbol a;
    ``symbol_counts[c]`` counts context c over all windows (plain symbol
    counts for order 1). ``smoothing`` > 0 adds that pseudo-count to every
    cell; it is off by default and changes the false-alarm constants.
    """

    pair_counts: np.ndarray
    symbol_counts: np.ndarray
    n0: int
    order: int = 1
    smoothing: float = 0.0
    n_symbols: int = field(init=False)
    transitions: np.ndarray = field(init=False, repr=False)
    initial_law: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        pairs = np.array(self.pair_counts, dtype=np.int64)
        marg = np.array(self.symbol_counts, dtype=np.int64).reshape(-1)
        n_symbols = pairs.shape[1]
        if pairs.shape[0] != n_symbols ** self.order or marg.shape[0] != pairs.shape[0]:
            raise ValueError("count tables do not match alphabet size and order")
        if marg.sum() != self.n0 - self.order + 1 or pairs.sum() != self.n0 - self.order:
            raise ValueError("count totals are inconsistent with n0")
        object.__setattr__(self, "pair_counts", pairs)
        object.__setattr__(self, "symbol_counts", marg)
        object.__setattr__(self, "n_symbols", n_symbols)
        s = self.smoothing
        row_tot = pairs.sum(axis=1, keepdims=True) + s * n_symbols
        with np.errstate(invalid="ignore", divide="ignore"):
            cond = np.where(row_tot > 0, (pairs + s) / np.where(row_tot > 0, row_tot, 1), 0.0)
        init = (marg + s) / (marg.sum() + s * marg.shape[0])
        cond.setflags(write=False)
        init.setflags(write=False)
        object.__setattr__(self, "transitions", cond)
        object.__setattr__(self, "initial_law", init)

    @property
    def covered_contexts(self) -> np.ndarray:
        return self.pair_counts.sum(axis=1) > 0

    def conditional(self, a: int, context: int) -> float:
        return float(self.transitions[context, a])

    def marginal(self, context: int) -> float:
        return float(self.initial_law[context])


def fit(x_train: Sequence[int], n_symbols: Optional[int] = None, order: int = 1,
        smoothing: float = 0.0) -> EmpiricalMarkovEstimate:
    x = np.asarray(x_train, dtype=np.int64)
    n0 = x.shape[0]
    if n0 < order + 1:
        raise TrainingTooShort(f"need at least {order + 1} training symbols, got {n0}")
    if n_symbols is None:
        n_symbols = max(2, int(x.max()) + 1)
    if x.min() < 0 or x.max() >= n_symbols:
        raise ValueError("training symbols outside the alphabet")
    n_ctx = n_symbols ** order
    pairs = _kernels.transition_counts(x, order, n_symbols, n_ctx)
    marg = pairs.sum(axis=1)
    last = 0
    for s in x[n0 - order:]:
        last = last * n_symbols + int(s)
    marg[last] += 1
    return EmpiricalMarkovEstimate(pairs, marg, n0, order, smoothing)


@dataclass(frozen=True)
class CoverageReport:
    missing_symbols: tuple
    missing_pairs: tuple

    @property
    def covered(self) -> bool:
        return not self.missing_symbols and not self.missing_pairs


def coverage_check(est: EmpiricalMarkovEstimate, reference: MarkovModel) -> CoverageReport:
    """List contexts and (context, symbol) pairs the reference can produce
    but the training prefix never showed."""
    _check_same_shape(reference, est)
    live_ctx = reference.stationary > 0
    miss_sym = np.flatnonzero(live_ctx & (est.symbol_counts == 0))
    live_pair = live_ctx[:, None] & (reference.transitions > 0)
    miss_pair = np.argwhere(live_pair & (est.pair_counts == 0))
    return CoverageReport(tuple(int(c) for c in miss_sym),
                          tuple((int(c), int(a)) for c, a in miss_pair))


def seq_log2_prob(est: EmpiricalMarkovEstimate, x: Sequence[int]) -> float:
    return est.log2_prob(x)


def f_n_expansion(model: MarkovModel, est: EmpiricalMarkovEstimate, x: Sequence[int]) -> float:
    """Count-weighted form: sum over pairs of N(c,a|x)/n * log2(p/p_hat) plus
    the first-context term."""
    x = np.asarray(x, dtype=np.int64)
    n = x.shape[0]
    r = model.order
    first = x[:r]
    total = model.block_log2_marginal(first) - est.block_log2_marginal(first)
    if n > r:
        ctx = context_codes(x, r, model.n_symbols)
        counts = np.zeros_like(est.pair_counts)
        np.add.at(counts, (ctx, x[r:]), 1)
        seen = counts > 0
        ratio = model.log2_transitions[seen] - est.log2_transitions[seen]
        total += float(np.sum(counts[seen] * ratio))
    return total / n


def f_n_ratio(model: MarkovModel, est: EmpiricalMarkovEstimate, x: Sequence[int]) -> float:
    """(1/n) log2(mu0(x) / mu0_hat(x)), cross-checked against the expansion."""
    x = np.asarray(x, dtype=np.int64)
    _check_same_shape(model, est)
    lp = model.log2_prob(x)
    lq = est.log2_prob(x)
    if math.isinf(lp) or math.isinf(lq):
        raise SupportViolation("sequence has zero probability under the model or estimate")
    direct = (lp - lq) / x.shape[0]
    expanded = f_n_expansion(model, est, x)
    if abs(direct - expanded) > FN_AGREEMENT_TOL:
        raise ArithmeticError(f"f_n forms disagree: {direct!r} vs {expanded!r}")
    return direct


def f_n_path(model: MarkovModel, est: EmpiricalMarkovEstimate, x: np.ndarray) -> np.ndarray:
    """f_n for every prefix length n = 1..len(x)."""
    hm, cm = model.window_log2_arrays(x[:model.order + 1])
    he, ce = est.window_log2_arrays(x[:model.order + 1])
    r = model.order
    n = x.shape[0]
    diff = np.empty(n)
    for w in range(1, min(r, n) + 1):
        diff[w - 1] = hm[0, w - 1] - he[0, w - 1]
    if n > r:
        ctx = context_codes(x, r, model.n_symbols)
        inc = model.log2_transitions[ctx, x[r:]] - est.log2_transitions[ctx, x[r:]]
        diff[r:] = diff[r - 1] + np.cumsum(inc)
    return diff / np.arange(1, n + 1)


@dataclass(frozen=True)
class BetaBound:
    delta: float
    delta_prime: float
    beta_prime: float
    beta_double_prime: float
    min_pair_prob: float
    min_marginal: float

    @property
    def beta(self) -> float:
        return self.beta_prime * self.beta_double_prime

    @property
    def log2_beta(self) -> float:
        return math.log2(self.beta_prime) + math.log2(self.beta_double_prime)


def _min_supported(model: MarkovModel):
    live = model.stationary > 0
    rows = model.transitions[live]
    min_pair = float(rows[rows > 0].min())
    init = model.initial_law
    min_marg = float(init[init > 0].min())
    return min_pair, min_marg


def beta_bound(model: MarkovModel, delta: float, delta_prime: float) -> BetaBound:
    """Per-symbol bound on mu0/mu0_hat when every estimate is within
    (delta, delta_prime) of the truth; taken at the least likely pair and
    the least likely context."""
    min_pair, min_marg = _min_supported(model)
    if not 0 <= delta < min_pair:
        raise InadmissibleDelta(f"delta={delta} must lie in [0, {min_pair})")
    if not 0 <= delta_prime < min_marg:
        raise InadmissibleDelta(f"delta_prime={delta_prime} must lie in [0, {min_marg})")
    return BetaBound(delta, delta_prime,
                     min_pair / (min_pair - delta),
                     min_marg / (min_marg - delta_prime),
                     min_pair, min_marg)


def deviations(est: EmpiricalMarkovEstimate, model: MarkovModel):
    """(max conditional deviation over live contexts, max marginal deviation)."""
    live = model.stationary > 0
    cond = np.abs(est.transitions[live] - model.transitions[live]).max()
    marg = np.abs(est.initial_law - model.initial_law).max()
    return float(cond), float(marg)


def within_deviation(est: EmpiricalMarkovEstimate, model: MarkovModel,
                     delta: float, delta_prime: float) -> bool:
    cond, marg = deviations(est, model)
    return cond < delta and marg < delta_prime


@dataclass(frozen=True)
class EstimatorQuality:
    n0: int
    delta: float
    delta_prime: float
    epsilon0: float
    trials: int

    @property
    def stderr(self) -> float:
        e = self.epsilon0
        return math.sqrt(e * (1 - e) / self.trials)


def epsilon0_estimate(model: MarkovModel, n0: int, delta: float, delta_prime: float,
                      trials: int, seed: SeedLike = None) -> EstimatorQuality:
    """Monte Carlo probability that some conditional deviates by more than
    delta or some marginal by more than delta_prime, over fresh training
    prefixes of length n0."""
    if trials < 100:
        raise ValueError("epsilon0_estimate needs at least 100 trials")
    rng = as_generator(seed)
    bad = 0
    for _ in range(trials):
        est = fit(model.sample(n0, rng), model.n_symbols, model.order)
        cond, marg = deviations(est, model)
        bad += cond > delta or marg > delta_prime
    return EstimatorQuality(n0, delta, delta_prime, bad / trials, trials)
