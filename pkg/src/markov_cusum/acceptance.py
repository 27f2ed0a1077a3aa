"""Acceptance suite: eleven end-to-end checks, each printing one PASS/FAIL line.

``quick=True`` shrinks trial counts and sweep sizes for a smoke run; the
tolerances never change. Every criterion draws from its own stream
``default_rng([seed, criterion, ...])``.
"""
from __future__ import annotations

import itertools
import math
import sys
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .codes import CodecSpec, code_length, code_lengths, kraft_check, new_codec
from .detectors import (UniversalCusum, fixed_sample_test, nstar, run_detector)
from .estimation import beta_bound, epsilon0_estimate, f_n_path, f_n_ratio, fit, within_deviation
from .experiments import (DEFAULT_MU0, DEFAULT_MU1, ExperimentConfig, prepare,
                          run_delay_sweep, run_e0_check, run_false_alarm_sweep,
                          run_optimality_ratio)
from .fastcusum import CtwCusumEngine
from .markov_core import MarkovModel, RunningLog2Prob, divergence_rate, entropy_rate

DEFAULT_SEED = 1234


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    summary: str
    seconds: float = 0.0
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return (f"criterion {self.number:2d} [{mark}] {self.title}: {self.summary} "
                f"({self.seconds:.1f} s)")


def default_pair():
    return MarkovModel(np.array(DEFAULT_MU0)), MarkovModel(np.array(DEFAULT_MU1))


def _rng(seed, number, *key):
    return np.random.default_rng([seed, number, *key])


# 1 ---------------------------------------------------------------------------------

def kraft(seed: int, quick: bool) -> CriterionResult:
    n_max = 10 if quick else 12
    worst = {}
    ok = True
    for kind, depth in (("ctw", 1), ("ctw", 2), ("lz78", None)):
        label = kind if depth is None else f"{kind}-d{depth}"
        sums = [kraft_check(kind, n, 2, depth) for n in range(1, n_max + 1)]
        worst[label] = max(sums)
        ok &= all(s <= 1 + 1e-12 for s in sums)
    txt = ", ".join(f"{k} max {v:.15f}" for k, v in worst.items())
    return CriterionResult(1, "Kraft sums, binary, n <= %d" % n_max, ok,
                           f"{txt} (limit 1 + 1e-12)", details=worst)


# 2 ---------------------------------------------------------------------------------

def fixed_sample_exponent(seed: int, quick: bool) -> CriterionResult:
    mu0, mu1 = default_pair()
    lam = divergence_rate(mu1, mu0) / 2
    worst_margin = -math.inf
    rows = []
    for n in range(1, 11):
        mass = math.fsum(2.0 ** mu0.log2_prob(x)
                         for x in itertools.product((0, 1), repeat=n)
                         if fixed_sample_test(mu0, mu1, lam, x)[0])
        bound = 2.0 ** (-n * lam)
        rows.append((n, mass, bound))
        worst_margin = max(worst_margin, mass - bound)
    ok = all(m <= b for _, m, b in rows)
    return CriterionResult(2, "fixed-sample false-alarm exponent", ok,
                           f"lam = D/2 = {lam:.5f}, max of mu0(h>=0) - 2^-n*lam over n<=10 "
                           f"is {worst_margin:.4g}", details={"rows": rows})


# 3 ---------------------------------------------------------------------------------

def smb_convergence(seed: int, quick: bool) -> CriterionResult:
    mu0, mu1 = default_pair()
    n = 100_000
    h = entropy_rate(mu0)
    d = divergence_rate(mu1, mu0)
    x0 = mu0.sample(n, _rng(seed, 3, 0))
    x1 = mu1.sample(n, _rng(seed, 3, 1))
    est = {
        "entropy (likelihood)": (-mu0.log2_prob(x0) / n, h),
        "entropy (CTW length)": (code_lengths("ctw", x0, 2, 1)[-1] / n, h),
        "divergence (likelihood)": ((mu1.log2_prob(x1) - mu0.log2_prob(x1)) / n, d),
        "divergence (CTW length)": ((-code_lengths("ctw", x1, 2, 1)[-1] - mu0.log2_prob(x1)) / n, d),
    }
    rel = {k: abs(v - ref) / ref for k, (v, ref) in est.items()}
    ok = all(r <= 0.02 for r in rel.values())
    txt = "; ".join(f"{k} {est[k][0]:.5f} vs {est[k][1]:.5f} ({100 * r:.2f}%)"
                    for k, r in rel.items())
    return CriterionResult(3, "per-symbol entropy/divergence, n = 1e5, 2%", ok, txt,
                           details=rel)


# 4 ---------------------------------------------------------------------------------

def estimator_consistency(seed: int, quick: bool) -> CriterionResult:
    mu0, _ = default_pair()
    trials = 50 if quick else 200
    errs = []
    rng = _rng(seed, 4, 0)
    for _ in range(trials):
        e = fit(mu0.sample(1_000_000, rng), 2)
        errs.append(float(np.abs(e.transitions - mu0.transitions).max()))
    frac = float(np.mean(np.array(errs) <= 0.01))
    ok_a = frac >= 0.95
    eps_trials = 200 if quick else 1000
    delta, delta_p = 0.02, 0.04
    qs = [epsilon0_estimate(mu0, n0, delta, delta_p, eps_trials, _rng(seed, 4, 1, n0))
          for n0 in (1000, 10_000, 100_000)]
    ok_b = all(b.epsilon0 <= a.epsilon0 + 3 * math.hypot(a.stderr, b.stderr)
               for a, b in zip(qs, qs[1:]))
    eps_txt = ", ".join(f"{q.epsilon0:.4f}±{q.stderr:.4f}" for q in qs)
    return CriterionResult(4, "estimator consistency", ok_a and ok_b,
                           f"n0=1e6: {100 * frac:.1f}% of {trials} trials with sup error <= 0.01 "
                           f"(max {max(errs):.5f}); eps0 at n0=1e3,1e4,1e5 "
                           f"(delta={delta}, delta'={delta_p}): {eps_txt}",
                           details={"fraction": frac, "eps0": [q.epsilon0 for q in qs]})


# 5 ---------------------------------------------------------------------------------

def beta_bound_check(seed: int, quick: bool) -> CriterionResult:
    mu0, _ = default_pair()
    delta, delta_p = 0.02, 0.04
    beta = beta_bound(mu0, delta, delta_p)
    want = 20 if quick else 100
    rng = _rng(seed, 5)
    checked = attempts = 0
    worst = -math.inf
    ok = True
    while checked < want and attempts < 20 * want:
        attempts += 1
        est = fit(mu0.sample(10_000, rng), 2)
        if not within_deviation(est, mu0, delta, delta_p):
            continue
        x = mu0.sample(10_000, rng)
        fn = f_n_path(mu0, est, x)
        f_n_ratio(mu0, est, x)  # raises if the two f_n forms disagree
        worst = max(worst, float(fn.max()))
        ok &= bool(np.all(fn <= beta.log2_beta + 1e-9))
        checked += 1
    ok &= checked == want
    return CriterionResult(5, "f_n <= log2 beta on accurate estimates", ok,
                           f"{checked} paths (of {attempts} estimates), max f_n {worst:.5f} "
                           f"vs log2 beta {beta.log2_beta:.5f}")


# 6 ---------------------------------------------------------------------------------

def false_alarm(seed: int, quick: bool) -> CriterionResult:
    cfg = ExperimentConfig(n0=100_000, delta=0.005, delta_prime=0.01,
                           alphas=tuple(2.0 ** -k for k in range(4, 11)),
                           trials=1000 if quick else 10_000, horizon=10_000,
                           eps0_trials=200 if quick else 1000, fresh_training=True,
                           seed=seed * 100 + 6)
    rep = run_false_alarm_sweep(cfg)
    ok = all(p.rate <= p.bound + 3 * p.rate_stderr for p in rep.points)
    txt = "; ".join(f"2^-{p.log2_threshold:g}: {p.rate:.4f} <= {p.bound:.4f}"
                    for p in rep.points)
    c = rep.constants
    return CriterionResult(6, "false-alarm rate under the bound", ok,
                           f"lam={c['lambda']:.4f} (mid-window), eps0={c['epsilon0']:.4f}; {txt}",
                           details={"points": rep.points})


# 7 ---------------------------------------------------------------------------------

def termination(seed: int, quick: bool) -> CriterionResult:
    cfg = ExperimentConfig(n0=100_000, lam=0.1, delta=0.003, delta_prime=0.006,
                           alphas=(2.0 ** -10,), trials=200 if quick else 1000,
                           change_point=1, eps0_trials=0, seed=seed * 100 + 7)
    rep = run_delay_sweep(cfg)
    p = rep.points[0]
    c = rep.constants
    ok = p.censored_fraction == 0 and cfg.lam < c["D_mu1_est"]
    return CriterionResult(7, "termination under mu1", ok,
                           f"alpha=2^-10, lam=0.1 < D(mu1||est)={c['D_mu1_est']:.4f}, "
                           f"horizon {c['horizon']}, censored {p.censored_fraction:.4f} of "
                           f"{p.trials}, mean delay {p.mean_delay:.1f}")


# 8 ---------------------------------------------------------------------------------

def delay_slope(seed: int, quick: bool) -> CriterionResult:
    cfg = ExperimentConfig(n0=100_000, lam=0.1, delta=0.003, delta_prime=0.006,
                           alphas=tuple(2.0 ** -k for k in range(5, 21)),
                           trials=300 if quick else 2000, change_point=1, eps0_trials=0,
                           seed=seed * 100 + 8)
    rep = run_delay_sweep(cfg)
    s = rep.slope
    ok = s.relative_error <= 0.15
    return CriterionResult(8, "delay slope of N(alpha)", ok,
                           f"slope {s.slope:.3f} [{s.ci_low:.3f}, {s.ci_high:.3f}] vs "
                           f"1/(D - lam) = {s.theoretical:.3f}, off by "
                           f"{100 * s.relative_error:.1f}% (limit 15%)",
                           details={"slope": s, "points": rep.points})


# 9 ---------------------------------------------------------------------------------

LORDEN_DECADES = range(6, 11)


def cusum_slope_and_e0(seed: int, quick: bool) -> CriterionResult:
    base = dict(n0=100_000, lam=0.1, delta=0.003, delta_prime=0.006, window_penalty=True,
                seed=seed * 100 + 9)
    cfg = ExperimentConfig(**base, log2_gammas=tuple(k * math.log2(10) for k in LORDEN_DECADES),
                           change_grid=(1, 256, 512, 768), prefixes=8 if quick else 32,
                           continuations=30 if quick else 100, eps0_trials=0)
    rep = run_delay_sweep(cfg)
    s = rep.slope
    ok_slope = s.relative_error <= 0.20
    e0cfg = ExperimentConfig(**base, log2_gammas=(0.0, 0.5, 1.0, 2.0, 4.0, 8.0),
                             trials=50 if quick else 200, horizon=2000,
                             eps0_trials=200 if quick else 1000)
    e0 = run_e0_check(e0cfg)
    e0_txt = ", ".join(
        f"log2g={p.log2_gamma:g}: {p.censored_mean:.1f} vs {p.bound:.3f}"
        + ("" if p.conclusive else " (inconclusive)") for p in e0.points)
    return CriterionResult(9, "Lorden delay slope of M(gamma) and E0 bound",
                           ok_slope and e0.passed,
                           f"gamma 1e{LORDEN_DECADES[0]}..1e{LORDEN_DECADES[-1]}: slope "
                           f"{s.slope:.3f} [{s.ci_low:.3f}, {s.ci_high:.3f}] vs "
                           f"{s.theoretical:.3f}, off by {100 * s.relative_error:.1f}% "
                           f"(limit 20%); E0 {e0_txt}",
                           details={"slope": s, "points": rep.points, "e0": e0.points})


# 10 --------------------------------------------------------------------------------

def optimality_ratio(seed: int, quick: bool) -> CriterionResult:
    cfg = ExperimentConfig(n0=1_000_000, theta=0.5, delta=0.002, delta_prime=0.004,
                           log2_gammas=(16.0, 32.0, 64.0, 128.0, 256.0),
                           continuations=50 if quick else 200, eps0_trials=0,
                           window_penalty=True, seed=seed * 100 + 10)
    rep = run_optimality_ratio(cfg)
    last = rep.points[-1].ratio
    ok = rep.decreasing and 1.0 <= last <= 1.8
    txt = ", ".join(f"2^{p.log2_gamma:g}: {p.ratio:.3f}" for p in rep.points)
    return CriterionResult(10, "delay ratio against log2(gamma)/D", ok,
                           f"theta=0.5, lam={rep.constants['lambda']:.4f}; ratios {txt}; "
                           f"decreasing={rep.decreasing}, last in [1.0, 1.8]: "
                           f"{1.0 <= last <= 1.8}",
                           details={"points": rep.points})


# 11 --------------------------------------------------------------------------------

def brute_force_statistic(pre_law, codec: CodecSpec, lam: float, x, window_penalty: bool):
    """max over k of -L(x_k^n) - log2 q(x_k^n) - penalty, every window rescored
    from scratch."""
    out = []
    for n in range(1, len(x) + 1):
        best = -math.inf
        for k in range(1, n + 1):
            w = x[k - 1:n]
            run = RunningLog2Prob(pre_law)
            for a in w:
                logq = run.push(a)
            pen = lam * ((n - k + 1) if window_penalty else n)
            best = max(best, -code_length(codec.kind, w, codec.n_symbols, codec.depth)
                       - logq - pen)
        out.append(best)
    return np.array(out)


def structural_oracles(seed: int, quick: bool) -> CriterionResult:
    mu0, mu1 = default_pair()
    rng = _rng(seed, 11)
    est = fit(mu0.sample(2000, rng), 2)
    n_paths = 50 if quick else 200
    worst_ctw = 0.0
    lz_exact = True
    for i in range(n_paths):
        x = (mu1 if i % 2 else mu0).sample(int(rng.integers(1, 25)), rng)
        wp = bool(i % 4 >= 2)
        for codec in (CodecSpec("ctw", 2, 1 + i % 3), CodecSpec("lz78", 2)):
            det = UniversalCusum(est, codec, 0.1, math.inf, window_penalty=wp)
            got = np.array(run_detector(det, x, trace=True).trace.max_statistic)
            ref = brute_force_statistic(est, codec, 0.1, x, wp)
            if codec.kind == "lz78":
                lz_exact &= bool(np.array_equal(got, ref))
            else:
                eng = CtwCusumEngine(est, codec.depth, 0.1, len(x), wp)
                eng.advance(x)
                worst_ctw = max(worst_ctw, float(np.max(np.abs(got - ref))),
                                float(np.max(np.abs(eng.max_trace() - ref))))
    ok_a = lz_exact and worst_ctw <= 1e-9

    n_star = 20 if quick else 100
    agree = 0
    codec = CodecSpec("ctw", 2, 1)
    for i in range(n_star):
        m = int(rng.integers(1, 30))
        x = np.concatenate([mu0.sample(m - 1, rng), mu1.sample(60, rng)])
        alpha = 2.0 ** -float(rng.uniform(1, 6))
        a = nstar(alpha, est, codec, 0.1, x)
        det = UniversalCusum(est, codec, 0.1, -math.log2(alpha), window_penalty=True)
        b = run_detector(det, x)
        agree += a.stop_time == b.stop_time
    ok_b = agree == n_star

    n_seq = 200 if quick else 1000
    inc_ok = True
    worst_compiled = 0.0
    for i in range(n_seq):
        A = 2 + i % 2
        x = rng.integers(0, A, int(rng.integers(1, 40)))
        for kind, depth in (("ctw", i % 3), ("lz78", None)):
            codec = new_codec(kind, A, depth)
            inc = [codec.extend(a) for a in x]
            scratch = [code_length(kind, x[:n], A, depth) for n in range(1, len(x) + 1)]
            inc_ok &= inc == scratch
            compiled = code_lengths(kind, x, A, depth)
            worst_compiled = max(worst_compiled, float(np.max(np.abs(compiled - inc))))
    ok_c = inc_ok and worst_compiled <= 1e-9
    return CriterionResult(11, "structural oracles", ok_a and ok_b and ok_c,
                           f"max-over-k vs brute force on {n_paths} paths: LZ78 exact={lz_exact}, "
                           f"CTW max diff {worst_ctw:.2e}; N* == M on {agree}/{n_star}; "
                           f"incremental == from scratch on {n_seq} sequences: {inc_ok} "
                           f"(compiled max diff {worst_compiled:.1e})")


CRITERIA: dict = {1: kraft, 2: fixed_sample_exponent, 3: smb_convergence,
                  4: estimator_consistency, 5: beta_bound_check, 6: false_alarm,
                  7: termination, 8: delay_slope, 9: cusum_slope_and_e0,
                  10: optimality_ratio, 11: structural_oracles}


def run_criterion(number: int, quick: bool = False, seed: Optional[int] = None) -> CriterionResult:
    fn: Callable = CRITERIA[number]
    t = time.perf_counter()
    res = fn(DEFAULT_SEED if seed is None else seed, quick)
    res.seconds = time.perf_counter() - t
    return res


def run_all(quick: bool = False, seed: Optional[int] = None, only=None, stream=None) -> list:
    out = []
    for number in sorted(only or CRITERIA):
        res = run_criterion(number, quick, seed)
        if stream is not None:
            print(res.line(), file=stream, flush=True)
        out.append(res)
    return out


if __name__ == "__main__":
    results = run_all(quick="--quick" in sys.argv, stream=sys.stdout)
    sys.exit(0 if all(r.passed for r in results) else 1)
