"""Sequential change detectors and the threshold/penalty calculators around them.

Reference (pure Python) implementations live here; ``fastcusum`` holds the
compiled CTW engine used by the Monte Carlo harness.

Statistics, for monitored samples x_1, x_2, ... (training excluded):

* Page:       max_k  log2 mu1(x_k^n) - log2 mu0(x_k^n)
* universal:  max_k  -L(x_k^n) - log2 q(x_k^n) - penalty(k, n)

where q is the known pre-change law or the empirical estimate, and the
penalty is n*lam (global sample count, the default) or (n-k+1)*lam with
``window_penalty=True``. Thresholds are compared with >=.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .codes import CodecSpec, code_lengths
from .errors import DegenerateDrift, EmptyWindow, OutsideWindow, SupportViolation
from .estimation import BetaBound, EmpiricalMarkovEstimate
from .markov_core import (MarkovModel, RunningLog2Prob, _ChainLaw, divergence_rate,
                          context_codes)


@dataclass
class Trace:
    max_statistic: list = field(default_factory=list)
    argmax_start: list = field(default_factory=list)
    n_active: list = field(default_factory=list)

    def append(self, stat, arg, active):
        self.max_statistic.append(stat)
        self.argmax_start.append(arg)
        self.n_active.append(active)

    def __len__(self):
        return len(self.max_statistic)

    def to_csv(self, path, stop_time: Optional[int] = None):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "max_statistic", "argmax_start", "n_active_starts", "stopped"])
            for i, (s, k, a) in enumerate(zip(self.max_statistic, self.argmax_start,
                                               self.n_active), start=1):
                w.writerow([i, repr(float(s)), int(k), int(a),
                            int(stop_time is not None and i >= stop_time)])


@dataclass
class StoppingResult:
    """Outcome of running a stopping rule up to a horizon.

    ``stop_time`` is the first n whose statistic reaches the threshold, or
    None when the run was censored at ``horizon``. ``uncovered`` marks an
    alarm forced by a transition the training prefix never showed.
    """

    stopped: bool
    stop_time: Optional[int]
    horizon: int
    statistic_at_stop: float
    argmax_start: int
    threshold: float
    uncovered: bool = False
    trace: Optional[Trace] = None

    @property
    def censored(self) -> bool:
        return not self.stopped


class PageCusum:
    """Page's test with both laws known.

    Windows x_k^n start from the initial law at x_k, so the max over k obeys
    M_n = max(M_{n-1} + t_n, i_n) for order 1, where t_n is the transition
    log-ratio and i_n the initial-law log-ratio of x_n alone; for order r the
    r youngest windows are scored directly from block marginals.
    """

    def __init__(self, mu0: MarkovModel, mu1: MarkovModel, log2_gamma: float):
        if (mu0.n_symbols, mu0.order) != (mu1.n_symbols, mu1.order):
            raise ValueError("models must share alphabet and order")
        self.mu0, self.mu1 = mu0, mu1
        self.threshold = log2_gamma
        self.n = 0
        self._symbols: list = []
        self._core = -math.inf
        self._core_arg = 0
        self.statistic = -math.inf
        self.argmax_start = 0
        self.stopped = False
        self.uncovered = False

    @property
    def n_active(self) -> int:
        return min(self.n, self.mu0.order) + (1 if self.n > self.mu0.order else 0)

    def _block_ratio(self, block):
        r = self.mu1.block_log2_marginal(block) - self.mu0.block_log2_marginal(block)
        if not math.isfinite(r):
            raise SupportViolation(f"non-finite log-ratio on block {block}")
        return r

    def step(self, a: int) -> bool:
        r = self.mu0.order
        self._symbols.append(int(a))
        self.n += 1
        n = self.n
        x = self._symbols
        if n > r:
            ctx = 0
            for s in x[n - 1 - r:n - 1]:
                ctx = ctx * self.mu0.n_symbols + s
            t = float(self.mu1.log2_transitions[ctx, a] - self.mu0.log2_transitions[ctx, a])
            if not math.isfinite(t):
                raise SupportViolation(f"non-finite log-ratio at n={n}")
            cand = self._block_ratio(x[n - 1 - r:n - 1])
            if cand > self._core or self._core == -math.inf:
                self._core, self._core_arg = cand, n - r
            self._core += t
        best, arg = self._core, self._core_arg
        for k in range(max(1, n - r + 1), n + 1):
            v = self._block_ratio(x[k - 1:n])
            if v > best or arg == 0:
                best, arg = v, k
        self.statistic, self.argmax_start = best, arg
        self.stopped = best >= self.threshold
        return self.stopped


class _Candidate:
    __slots__ = ("start", "codec", "logq", "below", "stat")

    def __init__(self, start, codec, logq):
        self.start = start
        self.codec = codec
        self.logq = logq
        self.below = 0
        self.stat = -math.inf


class UniversalCusum:
    """Max-over-start-index CUSUM with a universal code for the post-change law.

    Each start k keeps its own codec state, because code lengths are not
    additive in k. ``prune=(slack, w)`` drops a start once its statistic has
    sat more than ``slack`` bits under the current max for ``w`` consecutive
    steps; the current argmax and the newest start are never dropped.
    With ``strict_support`` a zero-probability window under the pre-change
    law raises SupportViolation; otherwise it is an immediate alarm.
    """

    def __init__(self, pre_law: _ChainLaw, codec: CodecSpec, lam: float,
                 log2_threshold: float, window_penalty: bool = False,
                 prune: Optional[tuple] = None, strict_support: bool = False):
        if codec.n_symbols != pre_law.n_symbols:
            raise ValueError("codec alphabet does not match the pre-change law")
        self.pre_law = pre_law
        self.codec = codec
        self.lam = lam
        self.threshold = log2_threshold
        self.window_penalty = window_penalty
        self.prune = prune
        self.strict_support = strict_support
        self.candidates: list = []
        self.n = 0
        self.statistic = -math.inf
        self.argmax_start = 0
        self.stopped = False
        self.uncovered = False

    @property
    def n_active(self) -> int:
        return len(self.candidates)

    def step(self, a: int) -> bool:
        self.n += 1
        n = self.n
        self.candidates.append(_Candidate(n, self.codec.new(), RunningLog2Prob(self.pre_law)))
        best, arg = -math.inf, 0
        for c in self.candidates:
            c.codec.extend(a)
            logq = c.logq.push(a)
            if logq == -math.inf:
                if self.strict_support:
                    raise SupportViolation(f"window starting at {c.start} has zero "
                                           "probability under the pre-change law")
                self.uncovered = True
            pen = self.lam * ((n - c.start + 1) if self.window_penalty else n)
            c.stat = -c.codec.length - logq - pen
            if c.stat > best or arg == 0:
                best, arg = c.stat, c.start
        if self.prune is not None:
            slack, w = self.prune
            kept = []
            for c in self.candidates:
                c.below = c.below + 1 if c.stat < best - slack else 0
                if c.below < w or c.start == arg or c.start == n:
                    kept.append(c)
            self.candidates = kept
        self.statistic, self.argmax_start = best, arg
        self.stopped = best >= self.threshold
        return self.stopped


def jb_detector(mu0: MarkovModel, codec: CodecSpec, lam: float, log2_gamma: float,
                **kw) -> UniversalCusum:
    """Known pre-change law, universal code for the post-change law."""
    return UniversalCusum(mu0, codec, lam, log2_gamma, strict_support=True, **kw)


def proposed_detector(est: EmpiricalMarkovEstimate, codec: CodecSpec, lam: float,
                      log2_gamma: float, **kw) -> UniversalCusum:
    """Empirical pre-change estimate, universal code for the post-change law."""
    return UniversalCusum(est, codec, lam, log2_gamma, strict_support=False, **kw)


def run_detector(detector, path: Sequence[int], horizon: Optional[int] = None,
                 trace: bool = False) -> StoppingResult:
    path = np.asarray(path, dtype=np.int64)
    horizon = len(path) if horizon is None else min(horizon, len(path))
    rec = Trace() if trace else None
    for a in path[:horizon]:
        stopped = detector.step(a)
        if rec is not None:
            rec.append(detector.statistic, detector.argmax_start, detector.n_active)
        if stopped:
            return StoppingResult(True, detector.n, horizon, detector.statistic,
                                  detector.argmax_start, detector.threshold,
                                  detector.uncovered, rec)
    return StoppingResult(False, None, horizon, detector.statistic,
                          detector.argmax_start, detector.threshold, False, rec)


def window_log2_cumulative(law: _ChainLaw, x: np.ndarray) -> np.ndarray:
    """log2 law(x_1^n) for n = 1..len(x), accumulated left to right."""
    x = np.asarray(x, dtype=np.int64)
    n = x.shape[0]
    r = law.order
    out = np.empty(n)
    for w in range(1, min(r, n) + 1):
        out[w - 1] = law.block_log2_marginal(x[:w])
    if n > r:
        ctx = context_codes(x, r, law.n_symbols)
        steps = np.concatenate([[out[r - 1]], law.log2_transitions[ctx, x[r:]]])
        out[r - 1:] = np.cumsum(steps)
    return out


def single_start_statistic(pre_law: _ChainLaw, codec: CodecSpec, lam: float,
                           x: np.ndarray) -> np.ndarray:
    """-L(x_1^n) - log2 q(x_1^n) - n*lam for every n."""
    x = np.asarray(x, dtype=np.int64)
    lengths = code_lengths(codec.kind, x, codec.n_symbols, codec.depth)
    logq = window_log2_cumulative(pre_law, x)
    pen = lam * np.arange(1, x.shape[0] + 1)
    with np.errstate(invalid="ignore"):
        return -lengths - logq - pen


def first_crossing(stat: np.ndarray, threshold: float) -> Optional[int]:
    hits = np.flatnonzero(stat >= threshold)
    return int(hits[0] + 1) if hits.size else None


def aux_stop_N(alpha: float, pre_law: _ChainLaw, codec: CodecSpec, lam: float,
               path: Sequence[int], horizon: Optional[int] = None,
               strict_support: bool = False) -> StoppingResult:
    """First n whose single-start (k = 1) statistic reaches -log2(alpha).

    With the true pre-change law this is the known-law variant; with an
    estimate it is the training-based variant.
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    x = np.asarray(path, dtype=np.int64)
    horizon = len(x) if horizon is None else min(horizon, len(x))
    stat = single_start_statistic(pre_law, codec, lam, x[:horizon])
    thr = -math.log2(alpha)
    if strict_support and np.any(np.isposinf(stat)):
        raise SupportViolation("path has zero probability under the pre-change law")
    n = first_crossing(stat, thr)
    if n is None:
        last = float(stat[-1]) if horizon else -math.inf
        return StoppingResult(False, None, horizon, last, 1, thr)
    return StoppingResult(True, n, horizon, float(stat[n - 1]), 1, thr,
                          uncovered=bool(np.isposinf(stat[n - 1])))


def nstar(alpha: float, pre_law: _ChainLaw, codec: CodecSpec, lam: float,
          path: Sequence[int], horizon: Optional[int] = None) -> StoppingResult:
    """min over k of (N_k + k - 1), N_k being the single-start rule restarted
    at sample k."""
    x = np.asarray(path, dtype=np.int64)
    horizon = len(x) if horizon is None else min(horizon, len(x))
    thr = -math.log2(alpha)
    best = None
    best_k = 0
    best_stat = -math.inf
    for k in range(1, horizon + 1):
        if best is not None and k > best:
            break
        stat = single_start_statistic(pre_law, codec, lam, x[k - 1:horizon])
        nk = first_crossing(stat, thr)
        if nk is not None and (best is None or nk + k - 1 < best):
            best, best_k, best_stat = nk + k - 1, k, float(stat[nk - 1])
    if best is None:
        return StoppingResult(False, None, horizon, -math.inf, 0, thr)
    return StoppingResult(True, best, horizon, best_stat, best_k, thr)


def fixed_sample_test(mu0: MarkovModel, mu1: MarkovModel, lam: float,
                      x: Sequence[int]):
    """Discriminant h = log2 mu1(x) - log2 mu0(x) - n*lam; reject H0 iff h >= 0.

    Returns (reject, h).
    """
    x = np.asarray(x, dtype=np.int64)
    l1 = mu1.log2_prob(x)
    l0 = mu0.log2_prob(x)
    if l0 == -math.inf and l1 > -math.inf:
        raise SupportViolation("mu1 assigns mass where mu0 does not")
    if l1 == -math.inf:
        return False, -math.inf
    h = l1 - l0 - x.shape[0] * lam
    return h >= 0, h


class LambdaWindow(NamedTuple):
    lower: float
    upper: float

    def contains(self, lam: float) -> bool:
        return self.lower <= lam < self.upper

    @property
    def mid(self) -> float:
        return 0.5 * (self.lower + self.upper)


def lambda_window(est: _ChainLaw, mu0: MarkovModel, mu1: MarkovModel,
                  beta: Optional[BetaBound] = None) -> LambdaWindow:
    """(max(log2 beta, D(mu0||est)), D(mu1||est)); EmptyWindow if empty."""
    log2_beta = 0.0 if beta is None else beta.log2_beta
    d0 = divergence_rate(mu0, est)
    d1 = divergence_rate(mu1, est)
    if math.isinf(d0) or math.isinf(d1):
        raise EmptyWindow("a divergence against the estimate is infinite")
    lower = max(log2_beta, d0)
    if not lower < d1:
        raise EmptyWindow(f"no admissible penalty: lower edge {lower:.6g} >= "
                          f"upper edge {d1:.6g}")
    return LambdaWindow(lower, d1)


def check_lambda(lam: float, window: LambdaWindow) -> float:
    if not window.contains(lam):
        raise OutsideWindow(f"lambda={lam:.6g} outside [{window.lower:.6g}, {window.upper:.6g})")
    return lam


def lambda_for_theta(est: _ChainLaw, mu0: MarkovModel, mu1: MarkovModel, theta: float,
                     beta: Optional[BetaBound] = None) -> float:
    """lam = D(mu1||est) - D(mu1||mu0) / (1 + theta), validated against the window."""
    if theta < 0:
        raise ValueError("theta must be non-negative")
    lam = divergence_rate(mu1, est) - divergence_rate(mu1, mu0) / (1.0 + theta)
    window = lambda_window(est, mu0, mu1, beta)
    # rounding can land an exact edge a few ulps outside
    if abs(lam - window.lower) <= 1e-12:
        lam = window.lower
    return check_lambda(lam, window)


def _drift_factor(lam: float, log2_beta: float) -> float:
    if not lam > log2_beta:
        raise DegenerateDrift(f"lambda={lam} must exceed log2(beta)={log2_beta}")
    return 1.0 / (2.0 ** (lam - log2_beta) - 1.0)


def eta_threshold(gamma: float, lam: float, log2_beta: float, epsilon0: float) -> float:
    """gamma * (1/(2^(lam - log2 beta) - 1) + epsilon0 * gamma)."""
    return gamma * (_drift_factor(lam, log2_beta) + epsilon0 * gamma)


def false_alarm_bound(alpha: float, lam: float, log2_beta: float, epsilon0: float) -> float:
    """alpha / (2^(lam - log2 beta) - 1) + epsilon0, clamped to [0, 1]."""
    return min(1.0, max(0.0, alpha * _drift_factor(lam, log2_beta) + epsilon0))


def e0_lower_bound(gamma: float, lam: float, log2_beta: float, epsilon0: float) -> float:
    """1/2 + gamma / (2/(2^(lam - log2 beta) - 1) + 2 epsilon0 gamma)."""
    return 0.5 + gamma / (2.0 * _drift_factor(lam, log2_beta) + 2.0 * epsilon0 * gamma)
