"""Seeded Monte Carlo harness.

Every random draw comes from ``numpy.random.default_rng([seed, stream, ...])``
keyed by the trial (or cell) id, so results never depend on the worker count
or on the order work is scheduled in. Stopping times for a whole threshold
sweep come from one run per trial: the first index where the running max of
the statistic reaches each threshold.
"""
from __future__ import annotations

import copy
import csv
import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from functools import partial
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .codes import CodecSpec
from .detectors import (LambdaWindow, UniversalCusum, e0_lower_bound, false_alarm_bound,
                        lambda_for_theta, lambda_window, single_start_statistic,
                        _drift_factor)
from .errors import ConfigError, EmptyWindow, MarkovCusumError
from .estimation import (BetaBound, EmpiricalMarkovEstimate, EstimatorQuality, beta_bound,
                         epsilon0_estimate, fit)
from .fastcusum import CtwCusumEngine, crossing_times
from .markov_core import MarkovModel, divergence_rate
from .modelio import load_model

DEFAULT_MU0 = ((0.9, 0.1), (0.2, 0.8))
DEFAULT_MU1 = ((0.6, 0.4), (0.3, 0.7))

# stream tags for default_rng([seed, tag, ...])
TRAIN, EPS0, TRIAL, PREFIX, CONTINUATION = range(5)


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), *[int(k) for k in key]])


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment. Thresholds are given as alphas (aux rule N) or as
    log2 gammas (CUSUM M); ``change_point=None`` means no change ever.

    Penalty policy: ``lam`` explicit, else ``theta`` via lambda_for_theta,
    else the middle of the admissible window.
    """

    mu0: Optional[str] = None
    mu1: Optional[str] = None
    n0: int = 100_000
    codec: CodecSpec = CodecSpec("ctw", 2, 1)
    lam: Optional[float] = None
    theta: Optional[float] = None
    delta: float = 0.005
    delta_prime: float = 0.01
    alphas: tuple = ()
    log2_gammas: tuple = ()
    trials: int = 1000
    horizon: Optional[int] = None
    change_point: Optional[int] = None
    change_grid: tuple = (1,)
    prefixes: int = 32
    continuations: int = 50
    eps0_trials: int = 1000
    fresh_training: bool = False
    window_penalty: bool = False
    prune: Optional[tuple] = None
    seed: int = 0
    out: Optional[str] = None
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "log2_gammas", tuple(float(g) for g in self.log2_gammas))
        object.__setattr__(self, "change_grid", tuple(int(m) for m in self.change_grid))
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.horizon is not None and self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if self.n0 < 2:
            raise ConfigError("n0 must be >= 2")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.prefixes < 1 or self.continuations < 1:
            raise ConfigError("prefixes and continuations must be >= 1")
        if self.lam is not None and self.theta is not None:
            raise ConfigError("give either lam or theta, not both")
        if self.theta is not None and self.theta < 0:
            raise ConfigError("theta must be non-negative")
        if any(not 0 < a <= 1 for a in self.alphas):
            raise ConfigError("every alpha must lie in (0, 1]")
        if any(g < 0 for g in self.log2_gammas):
            raise ConfigError("every gamma must be >= 1")
        if self.change_point is not None and self.change_point < 1:
            raise ConfigError("change_point must be >= 1 or None")
        if not self.change_grid or min(self.change_grid) < 1:
            raise ConfigError("change grid must be non-empty with entries >= 1")
        if self.eps0_trials and self.eps0_trials < 100:
            raise ConfigError("eps0_trials must be 0 (skip) or >= 100")
        if self.prune is not None and (len(self.prune) != 2 or self.prune[1] < 1):
            raise ConfigError("prune must be (slack, w) with w >= 1")
        for path in (self.mu0, self.mu1):
            if path is not None:
                load_model(path)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["codec"] = asdict(self.codec)
        d.pop("out")
        d.pop("workers")
        return d

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, default=list)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def load_models(cfg: ExperimentConfig):
    mu0 = MarkovModel(np.array(DEFAULT_MU0)) if cfg.mu0 is None else load_model(cfg.mu0)
    mu1 = MarkovModel(np.array(DEFAULT_MU1)) if cfg.mu1 is None else load_model(cfg.mu1)
    for m in (mu0, mu1):
        if not isinstance(m, MarkovModel):
            raise ConfigError("mu0 and mu1 must be model files, not estimates")
    return mu0, mu1


@dataclass(frozen=True, eq=False)
class Setup:
    """Everything derived from a config before any trial runs."""

    mu0: MarkovModel
    mu1: MarkovModel
    est: EmpiricalMarkovEstimate
    beta: BetaBound
    quality: Optional[EstimatorQuality]
    window: Optional[LambdaWindow]
    lam: float
    d1_est: float
    d1_true: float
    d0_est: float

    @property
    def drift(self) -> float:
        return self.d1_est - self.lam

    @property
    def epsilon0(self) -> float:
        if self.quality is None:
            raise ConfigError("this experiment needs eps0_trials > 0")
        return self.quality.epsilon0

    def constants(self) -> dict:
        out = {"D_mu1_est": self.d1_est, "D_mu1_mu0": self.d1_true, "D_mu0_est": self.d0_est,
               "lambda": self.lam, "log2_beta": self.beta.log2_beta,
               "beta": self.beta.beta,
               "window": None if self.window is None else [self.window.lower,
                                                           self.window.upper]}
        if self.quality is not None:
            out["epsilon0"] = self.quality.epsilon0
            out["epsilon0_stderr"] = self.quality.stderr
            out["epsilon0_trials"] = self.quality.trials
        return out


def prepare(cfg: ExperimentConfig) -> Setup:
    mu0, mu1 = load_models(cfg)
    if cfg.codec.n_symbols != mu0.n_symbols:
        raise ConfigError("codec alphabet does not match the models")
    est = fit(mu0.sample(cfg.n0, stream(cfg.seed, TRAIN)), mu0.n_symbols, mu0.order)
    try:
        beta = beta_bound(mu0, cfg.delta, cfg.delta_prime)
    except MarkovCusumError as exc:
        raise ConfigError(str(exc)) from None
    quality = None
    if cfg.eps0_trials:
        quality = epsilon0_estimate(mu0, cfg.n0, cfg.delta, cfg.delta_prime,
                                    cfg.eps0_trials, stream(cfg.seed, EPS0))
    try:
        window = lambda_window(est, mu0, mu1, beta)
    except EmptyWindow:
        if cfg.lam is None:
            raise
        window = None
    if cfg.lam is not None:
        lam = float(cfg.lam)
    elif cfg.theta is not None:
        lam = lambda_for_theta(est, mu0, mu1, cfg.theta, beta)
    else:
        lam = window.mid
    return Setup(mu0, mu1, est, beta, quality, window, lam,
                 divergence_rate(mu1, est), divergence_rate(mu1, mu0),
                 divergence_rate(mu0, est))


def default_horizon(cfg: ExperimentConfig, setup: Setup, max_bits: float) -> int:
    """50 * threshold / drift, so censoring under the post-change law is rare."""
    if cfg.horizon is not None:
        return cfg.horizon
    if setup.drift <= 0:
        raise ConfigError("no horizon given and the post-change drift is not positive")
    return max(1, math.ceil(50 * max(max_bits, 1.0) / setup.drift))


# --- results -----------------------------------------------------------------

@dataclass(frozen=True)
class TrialResult:
    trial: int
    seed: int
    log2_threshold: float
    stop_time: Optional[int]
    change_point: Optional[int]
    delay: Optional[int] = None
    prefix: Optional[int] = None

    @property
    def censored(self) -> bool:
        return self.stop_time is None


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    stderr: float
    ci_low: float
    ci_high: float
    residuals: tuple
    theoretical: float

    @property
    def relative_error(self) -> float:
        return abs(self.slope - self.theoretical) / self.theoretical


def fit_slope(x: Sequence[float], y: Sequence[float], theoretical: float,
              level: float = 0.95) -> SlopeFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 4:
        raise ConfigError("a slope fit needs at least 4 sweep points")
    r = stats.linregress(x, y)
    half = stats.t.ppf(0.5 + level / 2, x.size - 2) * r.stderr
    resid = y - (r.intercept + r.slope * x)
    return SlopeFit(float(r.slope), float(r.intercept), float(r.stderr),
                    float(r.slope - half), float(r.slope + half),
                    tuple(float(v) for v in resid), float(theoretical))


@dataclass(frozen=True)
class SweepPoint:
    log2_threshold: float
    trials: int
    stops: int
    rate: float
    rate_stderr: float
    bound: Optional[float]
    mean_delay: Optional[float]
    delay_stderr: Optional[float]
    censored_fraction: float


@dataclass
class SweepReport:
    kind: str
    points: list
    constants: dict
    slope: Optional[SlopeFit] = None
    trials: list = field(default_factory=list, repr=False)


def _mean_stderr(v):
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        return None, None
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return float(v.mean()), se


def _point(bits, results, bound=None) -> SweepPoint:
    n = len(results)
    stops = sum(not r.censored for r in results)
    rate = stops / n
    delays = [r.delay for r in results if r.delay is not None]
    mean, se = _mean_stderr(delays)
    return SweepPoint(bits, n, stops, rate, math.sqrt(rate * (1 - rate) / n), bound,
                      mean, se, 1 - rate)


# --- worker pool ---------------------------------------------------------------

_WORKER_SETUP = None


def _init_worker(setup):
    global _WORKER_SETUP
    _WORKER_SETUP = setup


def _call(fn, cfg, args):
    return fn(_WORKER_SETUP, cfg, *args)


def _map(fn, cfg: ExperimentConfig, setup: Setup, tasks: list) -> list:
    """Results in task order, whatever the worker count."""
    if cfg.workers == 1 or len(tasks) < 2:
        return [fn(setup, cfg, *t) for t in tasks]
    chunk = max(1, len(tasks) // (4 * cfg.workers))
    with ProcessPoolExecutor(cfg.workers, initializer=_init_worker,
                             initargs=(setup,)) as pool:
        return list(pool.map(partial(_call, fn, cfg), tasks, chunksize=chunk))


# --- single-start rule N(alpha) --------------------------------------------------

def _monitored_path(setup: Setup, m: Optional[int], length: int, rng) -> np.ndarray:
    if m is None or m > length:
        return setup.mu0.sample(length, rng)
    # the post-change source is independent of the pre-change one
    pre = setup.mu0.sample(m - 1, rng)
    return np.concatenate([pre, setup.mu1.sample(length - m + 1, rng)])


def _aux_trial(setup: Setup, cfg: ExperimentConfig, trial: int, horizon: int,
               bits: tuple, m: Optional[int]):
    rng = stream(cfg.seed, TRIAL, trial)
    est = setup.est
    if cfg.fresh_training:
        est = fit(setup.mu0.sample(cfg.n0, rng), setup.mu0.n_symbols, setup.mu0.order)
    x = _monitored_path(setup, m, horizon, rng)
    stat = single_start_statistic(est, cfg.codec, setup.lam, x)
    return crossing_times(stat, bits)


def _aux_results(cfg, setup, horizon, bits, m):
    tasks = [(i, horizon, bits, m) for i in range(cfg.trials)]
    times = _map(_aux_trial, cfg, setup, tasks)
    per_point = [[] for _ in bits]
    for i, row in enumerate(times):
        for j, t in enumerate(row):
            delay = None if t is None or m is None else max(0, t - m + 1)
            per_point[j].append(TrialResult(i, cfg.seed, bits[j], t, m, delay))
    return per_point


def run_false_alarm_sweep(cfg: ExperimentConfig, setup: Optional[Setup] = None) -> SweepReport:
    """Stopping probability of N(alpha) on pure pre-change paths, against
    alpha / (2^(lam - log2 beta) - 1) + eps0."""
    if cfg.change_point is not None:
        raise ConfigError("a false-alarm sweep needs change_point = never")
    if not cfg.alphas:
        raise ConfigError("false-alarm sweep needs at least one alpha")
    setup = setup or prepare(cfg)
    bits = tuple(-math.log2(a) for a in cfg.alphas)
    horizon = default_horizon(cfg, setup, max(bits))
    per_point = _aux_results(cfg, setup, horizon, bits, None)
    points = [_point(b, res, false_alarm_bound(a, setup.lam, setup.beta.log2_beta,
                                               setup.epsilon0))
              for a, b, res in zip(cfg.alphas, bits, per_point)]
    consts = dict(setup.constants(), horizon=horizon)
    return SweepReport("false_alarm", points, consts,
                       trials=[r for res in per_point for r in res])


def run_delay_sweep(cfg: ExperimentConfig, setup: Optional[Setup] = None) -> SweepReport:
    """Mean delay of N(alpha) (alphas given) or Lorden delay of M(gamma)
    (gammas given), with the slope fit against 1/(D(mu1||est) - lam)."""
    setup = setup or prepare(cfg)
    theory = 1.0 / setup.drift if setup.drift > 0 else math.inf
    if not cfg.alphas:
        if not cfg.log2_gammas:
            raise ConfigError("delay sweep needs alphas or gammas")
        lorden = run_lorden_estimate(cfg, setup)
        return lorden.as_sweep(theory)
    m = 1 if cfg.change_point is None else cfg.change_point
    bits = tuple(-math.log2(a) for a in cfg.alphas)
    horizon = default_horizon(cfg, setup, max(bits)) + m - 1
    per_point = _aux_results(cfg, setup, horizon, bits, m)
    points = [_point(b, res) for b, res in zip(bits, per_point)]
    slope = None
    if len(points) >= 4 and all(p.mean_delay is not None for p in points):
        slope = fit_slope(bits, [p.mean_delay for p in points], theory)
    consts = dict(setup.constants(), horizon=horizon, change_point=m)
    return SweepReport("delay", points, consts, slope,
                       trials=[r for res in per_point for r in res])


# --- max-over-start CUSUM M(gamma) -------------------------------------------------

class _ReferenceEngine:
    """UniversalCusum behind the CtwCusumEngine interface (any codec)."""

    def __init__(self, setup: Setup, cfg: ExperimentConfig):
        self.det = UniversalCusum(setup.est, cfg.codec, setup.lam, math.inf,
                                  cfg.window_penalty, cfg.prune)
        self.trace = []

    @property
    def n(self) -> int:
        return self.det.n

    def copy(self):
        return copy.deepcopy(self)

    def advance(self, segment, log2_threshold=math.inf):
        for a in segment:
            self.det.step(a)
            self.trace.append(self.det.statistic)
            if self.det.statistic >= log2_threshold:
                return self.det.n
        return None

    def max_trace(self):
        return np.array(self.trace)


def _engine(setup: Setup, cfg: ExperimentConfig, capacity: int):
    if cfg.codec.kind == "ctw":
        return CtwCusumEngine(setup.est, cfg.codec.depth, setup.lam, capacity,
                              cfg.window_penalty, cfg.prune)
    return _ReferenceEngine(setup, cfg)


def _lorden_cell(setup: Setup, cfg: ExperimentConfig, m: int, prefix: int,
                 horizon: int, bits: tuple, n_cont: int):
    """Stop times (absolute, or None) for every continuation and threshold,
    given one sampled pre-change prefix of length m - 1."""
    eng = _engine(setup, cfg, m - 1 + horizon)
    pre = setup.mu0.sample(m - 1, stream(cfg.seed, PREFIX, m, prefix))
    pre_max = -math.inf
    if m > 1:
        eng.advance(pre)
        pre_max = float(np.max(eng.max_trace()))
    top = max(bits)
    out = []
    for j in range(n_cont):
        # common random numbers: continuation j is the same post-change path
        # after every prefix (the post-change source is independent of it)
        cont = setup.mu1.sample(horizon, stream(cfg.seed, CONTINUATION, j))
        e = eng.copy()
        e.advance(cont, top)
        post = e.max_trace()[m - 1:]
        times = crossing_times(post, bits)
        out.append([0 if pre_max >= b else (None if t is None else t + m - 1)
                    for b, t in zip(bits, times)])
    return out


@dataclass(frozen=True)
class LordenPoint:
    log2_threshold: float
    estimate: float
    stderr: float
    worst_change_point: int
    worst_prefix: int
    mean_delay: float
    censored_fraction: float
    per_change_point: tuple


@dataclass
class LordenReport:
    points: list
    constants: dict
    trials: list = field(default_factory=list, repr=False)

    def as_sweep(self, theory: float) -> SweepReport:
        pts = [SweepPoint(p.log2_threshold, len(self.trials) // max(1, len(self.points)),
                          0, math.nan, math.nan, None, p.estimate, p.stderr,
                          p.censored_fraction) for p in self.points]
        slope = None
        if len(pts) >= 4:
            slope = fit_slope([p.log2_threshold for p in self.points],
                              [p.estimate for p in self.points], theory)
        return SweepReport("lorden", pts, self.constants, slope, self.trials)


def _lorden(cfg: ExperimentConfig, setup: Setup, bits: tuple) -> LordenReport:
    if not bits:
        raise ConfigError("Lorden estimate needs at least one gamma")
    horizon = default_horizon(cfg, setup, max(bits))
    tasks = []
    for m in cfg.change_grid:
        # with m = 1 there is no prefix to sample
        for p in range(1 if m == 1 else cfg.prefixes):
            tasks.append((m, p, horizon, bits, cfg.continuations))
    cells = _map(_lorden_cell, cfg, setup, tasks)
    trials = []
    points = []
    for g, b in enumerate(bits):
        best = None
        all_delays = []
        censored = 0
        per_m = {}
        for (m, p, *_), cell in zip(tasks, cells):
            delays = []
            for j, row in enumerate(cell):
                t = row[g]
                if t is None:
                    censored += 1
                    d = horizon  # censored: counted at the horizon, a lower bound
                else:
                    d = max(0, t - m + 1)
                delays.append(d)
                trials.append(TrialResult(j, cfg.seed, b, t, m,
                                          None if t is None else d, p))
            mean, se = _mean_stderr(delays)
            all_delays.extend(delays)
            per_m.setdefault(m, []).append(mean)
            if best is None or mean > best[0]:
                best = (mean, se, m, p)
        points.append(LordenPoint(b, best[0], best[1], best[2], best[3],
                                  float(np.mean(all_delays)), censored / len(all_delays),
                                  tuple((m, float(np.mean(v))) for m, v in per_m.items())))
    consts = dict(setup.constants(), horizon=horizon, change_grid=list(cfg.change_grid),
                  prefixes=cfg.prefixes, continuations=cfg.continuations)
    return LordenReport(points, consts, trials)


def run_lorden_estimate(cfg: ExperimentConfig, setup: Optional[Setup] = None) -> LordenReport:
    """Worst case over the change-point grid and sampled prefixes of the mean
    post-change delay of M(gamma). A lower bound on the true worst case."""
    setup = setup or prepare(cfg)
    return _lorden(cfg, setup, tuple(cfg.log2_gammas))


# --- E0 and optimality ratio ---------------------------------------------------------

@dataclass(frozen=True)
class E0Point:
    log2_gamma: float
    censored_mean: float
    stderr: float
    censored_fraction: float
    bound: float
    trials: int

    @property
    def conclusive(self) -> bool:
        return self.censored_fraction < 0.5

    @property
    def holds(self) -> Optional[bool]:
        # a censored mean is biased low, so passing it is conservative
        return self.censored_mean >= self.bound if self.conclusive else None


@dataclass
class E0Report:
    points: list
    constants: dict

    @property
    def passed(self) -> bool:
        decided = [p.holds for p in self.points if p.conclusive]
        return bool(decided) and all(decided)


def _e0_trial(setup: Setup, cfg: ExperimentConfig, trial: int, horizon: int, bits: tuple):
    x = setup.mu0.sample(horizon, stream(cfg.seed, TRIAL, trial))
    eng = _engine(setup, cfg, horizon)
    eng.advance(x, max(bits))
    return crossing_times(eng.max_trace(), bits)


def run_e0_check(cfg: ExperimentConfig, setup: Optional[Setup] = None) -> E0Report:
    """Censored mean of M(gamma) under the pre-change law against
    1/2 + gamma / (2/(2^(lam - log2 beta) - 1) + 2 eps0 gamma)."""
    if cfg.change_point is not None:
        raise ConfigError("the E0 check needs change_point = never")
    if not cfg.log2_gammas:
        raise ConfigError("the E0 check needs at least one gamma")
    setup = setup or prepare(cfg)
    bits = tuple(cfg.log2_gammas)
    horizon = cfg.horizon or 2000
    times = _map(_e0_trial, cfg, setup, [(i, horizon, bits) for i in range(cfg.trials)])
    points = []
    for g, b in enumerate(bits):
        col = [t for row in times for t in [row[g]]]
        cens = sum(t is None for t in col)
        mean, se = _mean_stderr([horizon if t is None else t for t in col])
        bound = e0_lower_bound(2.0 ** b, setup.lam, setup.beta.log2_beta, setup.epsilon0)
        points.append(E0Point(b, mean, se, cens / len(col), bound, len(col)))
    return E0Report(points, dict(setup.constants(), horizon=horizon))


@dataclass(frozen=True)
class RatioPoint:
    log2_gamma: float
    log2_eta: float
    delay: float
    stderr: float
    benchmark: float
    censored_fraction: float

    @property
    def ratio(self) -> float:
        return self.delay / self.benchmark


@dataclass
class RatioReport:
    theta: float
    points: list
    constants: dict

    @property
    def decreasing(self) -> bool:
        r = [p.ratio for p in self.points]
        return all(b < a for a, b in zip(r, r[1:]))


def run_optimality_ratio(cfg: ExperimentConfig, setup: Optional[Setup] = None) -> RatioReport:
    """Lorden delay of M(eta) over log2(gamma) / D(mu1||mu0), with lam from
    theta and eta = gamma * (1/(2^(lam - log2 beta) - 1) + 1), i.e. eps0 = 1/gamma."""
    if cfg.theta is None or cfg.theta <= 0:
        raise ConfigError("the optimality ratio needs theta > 0")
    if not cfg.log2_gammas:
        raise ConfigError("the optimality ratio needs at least one gamma")
    setup = setup or prepare(cfg)
    extra = math.log2(_drift_factor(setup.lam, setup.beta.log2_beta) + 1.0)
    etas = tuple(g + extra for g in cfg.log2_gammas)
    lorden = _lorden(cfg, setup, etas)
    points = [RatioPoint(g, p.log2_threshold, p.estimate, p.stderr,
                         g / setup.d1_true, p.censored_fraction)
              for g, p in zip(cfg.log2_gammas, lorden.points)]
    return RatioReport(cfg.theta, points, dict(lorden.constants, log2_eta_offset=extra))


# --- output -------------------------------------------------------------------------

def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_rows(path: Path, rows: list, columns: list) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(row[c]) for c in columns])


def _json_ready(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return [_json_ready(x) for x in v]
    if isinstance(v, dict):
        return {k: _json_ready(x) for k, x in v.items()}
    return v


def write_outputs(name: str, report, cfg: ExperimentConfig, out_dir=None) -> list:
    """``<name>.csv`` (one row per point), ``<name>_trials.csv`` when the
    report has trials, and ``<name>.meta.json``. No timestamps, so equal
    configs give equal bytes."""
    out = Path(out_dir or cfg.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    pts = [asdict(p) for p in report.points]
    for p, obj in zip(pts, report.points):
        for extra in ("ratio", "conclusive", "holds"):
            if hasattr(obj, extra):
                p[extra] = getattr(obj, extra)
        p.pop("per_change_point", None)
    written = []
    cols = list(pts[0]) if pts else []
    _write_rows(out / f"{name}.csv", pts, cols)
    written.append(out / f"{name}.csv")
    trials = getattr(report, "trials", None)
    if trials:
        tcols = [f.name for f in fields(TrialResult)]
        _write_rows(out / f"{name}_trials.csv", [asdict(t) for t in trials], tcols)
        written.append(out / f"{name}_trials.csv")
    meta = {"config": cfg.to_dict(), "config_hash": cfg.digest(), "seed": cfg.seed,
            "constants": report.constants}
    slope = getattr(report, "slope", None)
    if slope is not None:
        meta["slope"] = dict(asdict(slope), relative_error=slope.relative_error)
    (out / f"{name}.meta.json").write_text(
        json.dumps(_json_ready(meta), sort_keys=True, indent=2, default=list) + "\n")
    written.append(out / f"{name}.meta.json")
    return written
