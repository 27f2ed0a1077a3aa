#!/usr/bin/env python3
"""False-alarm rate of the single-start rule against its bound, mid-window lambda.

Writes results/false_alarm.{csv,meta.json} and the per-trial file.
"""
import argparse

from markov_cusum.experiments import ExperimentConfig, run_false_alarm_sweep, write_outputs

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=10_000)
    ap.add_argument("--horizon", type=int, default=10_000)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()

    cfg = ExperimentConfig(n0=100_000, delta=0.005, delta_prime=0.01,
                           alphas=tuple(2.0 ** -k for k in range(4, 11)),
                           trials=args.trials, horizon=args.horizon, fresh_training=True,
                           seed=args.seed, workers=args.workers, out=args.out)
    rep = run_false_alarm_sweep(cfg)
    print(f"lambda={rep.constants['lambda']:.5g} eps0={rep.constants['epsilon0']:.4g}")
    for p in rep.points:
        print(f"alpha=2^-{p.log2_threshold:g}  rate={p.rate:.5f}  bound={p.bound:.5f}")
    for f in write_outputs("false_alarm", rep, cfg):
        print("wrote", f)
