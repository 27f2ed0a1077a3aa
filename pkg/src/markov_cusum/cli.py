"""Command line: simulate, detect, sweep, verify, info.

Exit codes: 0 success, 1 a checked property failed, 2 bad configuration.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from .codes import CodecSpec
from .detectors import (UniversalCusum, lambda_for_theta, lambda_window, run_detector)
from .errors import ConfigError, EmptyWindow, MarkovCusumError
from .estimation import beta_bound, fit
from .experiments import (DEFAULT_MU0, DEFAULT_MU1, ExperimentConfig, prepare,
                          run_delay_sweep, run_e0_check, run_false_alarm_sweep,
                          run_lorden_estimate, run_optimality_ratio, write_outputs)
from .fastcusum import run_ctw_cusum
from .markov_core import ChangeSpec, MarkovModel, divergence_rate, entropy_rate, sample_path
from .modelio import load_model, read_path_file, write_path_file


def parse_power(text: str) -> float:
    """log2 of a number written as '1e6', '0.01' or 'b^e' (e.g. '2^-10')."""
    text = text.strip()
    try:
        if "^" in text:
            base, exp = text.split("^", 1)
            base, exp = float(base), float(exp)
            if base <= 0:
                raise ValueError
            return exp * math.log2(base)
        value = float(text)
        if value <= 0:
            raise ValueError
        return math.log2(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a positive number: {text!r}") from None


def parse_power_list(text: str) -> list:
    items = [t for t in text.split(",") if t.strip()]
    if not items:
        raise argparse.ArgumentTypeError("empty list")
    return [parse_power(t) for t in items]


def parse_change_point(text: str) -> Optional[int]:
    if text == "never":
        return None
    try:
        m = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("change point must be an integer or 'never'") from None
    if m < 1:
        raise argparse.ArgumentTypeError("change point must be >= 1")
    return m


def parse_prune(text: str):
    if text == "off":
        return None
    try:
        slack, w = text.split(",")
        return float(slack), int(w)
    except ValueError:
        raise argparse.ArgumentTypeError("prune must be 'off' or 'slack,w'") from None


def parse_int_list(text: str) -> list:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of integers: {text!r}") from None


def _model(path: Optional[str], default) -> MarkovModel:
    if path is None:
        return MarkovModel(np.array(default))
    m = load_model(path)
    if not isinstance(m, MarkovModel):
        raise ConfigError(f"{path} holds an estimate, expected a model")
    return m


def _common(p: argparse.ArgumentParser, models=True) -> None:
    if models:
        p.add_argument("--mu0", help="pre-change model file (default: built-in pair)")
        p.add_argument("--mu1", help="post-change model file (default: built-in pair)")
    p.add_argument("--seed", type=int, default=0)


def _detector_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n0", type=int, default=100_000)
    p.add_argument("--codec", choices=("ctw", "lz78"), default="ctw")
    p.add_argument("--ctw-depth", type=int, default=1)
    lam = p.add_mutually_exclusive_group()
    lam.add_argument("--lambda", dest="lam", type=float)
    lam.add_argument("--theta", type=float)
    p.add_argument("--delta", type=float, default=0.005)
    p.add_argument("--delta-prime", type=float, default=0.01)
    p.add_argument("--prune", type=parse_prune, default=None)
    p.add_argument("--window-penalty", action="store_true")
    p.add_argument("--horizon", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="markov-cusum",
                                 description="Universal CUSUM change detection for Markov sources")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a training prefix plus monitored path")
    _common(p)
    p.add_argument("--n0", type=int, default=0, help="training symbols written first")
    p.add_argument("--horizon", type=int, required=True, help="monitored symbols")
    p.add_argument("--change-point", type=parse_change_point, default=None)
    p.add_argument("--out", required=True, help="path file to write")

    p = sub.add_parser("detect", help="run one detector on a path file")
    _common(p)
    _detector_args(p)
    p.add_argument("path", help="path file: training prefix, then monitored symbols")
    p.add_argument("--gammas", type=parse_power_list, default=[parse_power("1e4")],
                   help="threshold gamma (first value used)")
    p.add_argument("--known-mu0", action="store_true",
                   help="use mu0 itself instead of an estimate (n0 ignored)")
    p.add_argument("--out", help="directory for trace.csv")

    p = sub.add_parser("sweep", help="Monte Carlo false-alarm / delay sweeps")
    _common(p)
    _detector_args(p)
    p.add_argument("--kind", choices=("false-alarm", "delay", "lorden", "e0", "ratio"),
                   default="delay")
    thr = p.add_mutually_exclusive_group(required=True)
    thr.add_argument("--alphas", type=parse_power_list)
    thr.add_argument("--gammas", type=parse_power_list)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--change-point", type=parse_change_point, default=None)
    p.add_argument("--change-grid", type=parse_int_list, default=[1])
    p.add_argument("--prefixes", type=int, default=32)
    p.add_argument("--continuations", type=int, default=50)
    p.add_argument("--eps0-trials", type=int, default=1000)
    p.add_argument("--fresh-training", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="results")

    p = sub.add_parser("verify", help="run the acceptance suite")
    _common(p, models=False)
    p.add_argument("--quick", action="store_true")
    p.add_argument("--only", type=parse_int_list, help="criterion numbers to run")

    p = sub.add_parser("info", help="entropy, divergence and penalty window of a model pair")
    _common(p)
    p.add_argument("--n0", type=int, default=0, help="train an estimate first (0: use mu0)")
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--delta-prime", type=float, default=0.0)
    return ap


def cmd_simulate(args) -> int:
    mu0, mu1 = _model(args.mu0, DEFAULT_MU0), _model(args.mu1, DEFAULT_MU1)
    if args.horizon < 1 or args.n0 < 0:
        raise ConfigError("horizon must be >= 1 and n0 >= 0")
    spec = ChangeSpec(mu0, mu1, args.change_point, args.n0)
    x = sample_path(spec, args.n0 + args.horizon, args.seed)
    write_path_file(x, args.out)
    print(f"wrote {len(x)} symbols to {args.out} (n0={args.n0}, "
          f"change_point={args.change_point or 'never'})")
    return 0


def cmd_detect(args) -> int:
    mu0, mu1 = _model(args.mu0, DEFAULT_MU0), _model(args.mu1, DEFAULT_MU1)
    x = read_path_file(args.path, mu0.n_symbols)
    n0 = 0 if args.known_mu0 else args.n0
    if n0 >= len(x):
        raise ConfigError(f"path has {len(x)} symbols, not more than n0={n0}")
    pre = mu0 if args.known_mu0 else fit(x[:n0], mu0.n_symbols, mu0.order)
    monitored = x[n0:]
    beta = beta_bound(mu0, args.delta, args.delta_prime)
    if args.lam is not None:
        lam = args.lam
    elif args.theta is not None:
        lam = lambda_for_theta(pre, mu0, mu1, args.theta, beta)
    else:
        lam = lambda_window(pre, mu0, mu1, beta).mid
    log2_gamma = args.gammas[0]
    codec = CodecSpec(args.codec, mu0.n_symbols, args.ctw_depth)
    if args.codec == "ctw" and not args.known_mu0:
        res = run_ctw_cusum(pre, args.ctw_depth, lam, monitored, log2_gamma, args.horizon,
                            args.window_penalty, args.prune, trace=bool(args.out))
    else:
        det = UniversalCusum(pre, codec, lam, log2_gamma, args.window_penalty, args.prune,
                             strict_support=args.known_mu0)
        res = run_detector(det, monitored, args.horizon, trace=bool(args.out))
    print(f"lambda={lam:.6g} log2_gamma={log2_gamma:.6g} horizon={res.horizon}")
    if res.stopped:
        print(f"stop_time={res.stop_time} statistic={res.statistic_at_stop:.6g} "
              f"argmax_start={res.argmax_start}" + (" uncovered" if res.uncovered else ""))
    else:
        print(f"censored: no alarm within {res.horizon} samples")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        res.trace.to_csv(out / "trace.csv", res.stop_time)
        print(f"trace written to {out / 'trace.csv'}")
    return 0


def _config_from_args(args) -> ExperimentConfig:
    alphas = tuple(2.0 ** b for b in args.alphas) if args.alphas else ()
    return ExperimentConfig(
        mu0=args.mu0, mu1=args.mu1, n0=args.n0,
        codec=CodecSpec(args.codec, 2, args.ctw_depth) if args.mu0 is None else
        CodecSpec(args.codec, load_model(args.mu0).n_symbols, args.ctw_depth),
        lam=args.lam, theta=args.theta, delta=args.delta, delta_prime=args.delta_prime,
        alphas=alphas, log2_gammas=tuple(args.gammas or ()), trials=args.trials,
        horizon=args.horizon, change_point=args.change_point,
        change_grid=tuple(args.change_grid), prefixes=args.prefixes,
        continuations=args.continuations, eps0_trials=args.eps0_trials,
        fresh_training=args.fresh_training, window_penalty=args.window_penalty,
        prune=args.prune, seed=args.seed, out=args.out, workers=args.workers)


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.5g}"
    return str(v)


def cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    ok = True
    if args.kind == "false-alarm":
        rep = run_false_alarm_sweep(cfg)
        for p in rep.points:
            good = p.rate <= p.bound + 3 * p.rate_stderr
            ok &= good
            print(f"log2(1/alpha)={p.log2_threshold:g} rate={p.rate:.5g}±{p.rate_stderr:.2g} "
                  f"bound={p.bound:.5g} {'ok' if good else 'VIOLATED'}")
    elif args.kind in ("delay", "lorden"):
        if args.kind == "lorden" and not cfg.log2_gammas:
            raise ConfigError("lorden sweep needs --gammas")
        rep = run_delay_sweep(cfg)
        for p in rep.points:
            print(f"threshold={p.log2_threshold:.5g} bits mean_delay={_fmt(p.mean_delay)}"
                  f"±{_fmt(p.delay_stderr)} censored={p.censored_fraction:.3g}")
        if rep.slope is not None:
            s = rep.slope
            print(f"slope={s.slope:.5g} [{s.ci_low:.5g}, {s.ci_high:.5g}] "
                  f"theory={s.theoretical:.5g} rel_err={s.relative_error:.3g}")
    elif args.kind == "e0":
        rep = run_e0_check(cfg)
        for p in rep.points:
            verdict = {True: "ok", False: "VIOLATED", None: "inconclusive"}[p.holds]
            ok &= p.holds is not False
            print(f"log2_gamma={p.log2_gamma:g} E0>={p.censored_mean:.5g}±{p.stderr:.2g} "
                  f"censored={p.censored_fraction:.3g} bound={p.bound:.5g} {verdict}")
    else:
        rep = run_optimality_ratio(cfg)
        for p in rep.points:
            print(f"log2_gamma={p.log2_gamma:g} delay={p.delay:.5g}±{p.stderr:.2g} "
                  f"ratio={p.ratio:.4f}")
        print(f"decreasing={rep.decreasing}")
    files = write_outputs(args.kind.replace("-", "_"), rep, cfg)
    print("wrote " + ", ".join(str(f) for f in files))
    return 0 if ok else 1


def cmd_verify(args) -> int:
    from .acceptance import run_all
    results = run_all(quick=args.quick, seed=args.seed or None, only=args.only,
                      stream=sys.stdout)
    return 0 if all(r.passed for r in results) else 1


def cmd_info(args) -> int:
    mu0, mu1 = _model(args.mu0, DEFAULT_MU0), _model(args.mu1, DEFAULT_MU1)
    print(f"H(mu0) = {entropy_rate(mu0):.6g} bits/symbol")
    print(f"H(mu1) = {entropy_rate(mu1):.6g} bits/symbol")
    print(f"D(mu1||mu0) = {divergence_rate(mu1, mu0):.6g}")
    print(f"D(mu0||mu1) = {divergence_rate(mu0, mu1):.6g}")
    ref = mu0
    if args.n0:
        ref = fit(mu0.sample(args.n0, args.seed), mu0.n_symbols, mu0.order)
        print(f"estimate from n0={args.n0}: D(mu1||est) = {divergence_rate(mu1, ref):.6g}, "
              f"D(mu0||est) = {divergence_rate(mu0, ref):.6g}")
    beta = beta_bound(mu0, args.delta, args.delta_prime)
    print(f"log2 beta = {beta.log2_beta:.6g}")
    try:
        w = lambda_window(ref, mu0, mu1, beta)
        print(f"lambda window = [{w.lower:.6g}, {w.upper:.6g}), mid {w.mid:.6g}")
    except EmptyWindow as exc:
        print(f"lambda window: EmptyWindow ({exc})")
    return 0


COMMANDS = {"simulate": cmd_simulate, "detect": cmd_detect, "sweep": cmd_sweep,
            "verify": cmd_verify, "info": cmd_info}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, MarkovCusumError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
