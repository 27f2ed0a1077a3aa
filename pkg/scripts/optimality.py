#!/usr/bin/env python3
"""Delay of the CUSUM over the known-law benchmark log2(gamma)/D(mu1||mu0), for growing gamma."""
import argparse

from markov_cusum.experiments import ExperimentConfig, run_optimality_ratio, write_outputs

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--theta", type=float, default=0.5)
    ap.add_argument("--log2-gammas", default="16,32,64,128,256")
    ap.add_argument("--continuations", type=int, default=200)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()

    cfg = ExperimentConfig(n0=1_000_000, theta=args.theta, delta=0.002, delta_prime=0.004,
                           log2_gammas=tuple(map(float, args.log2_gammas.split(","))),
                           change_grid=(1,), continuations=args.continuations,
                           window_penalty=True, eps0_trials=0, seed=args.seed,
                           workers=args.workers, out=args.out)
    rep = run_optimality_ratio(cfg)
    for p in rep.points:
        print(f"log2(gamma)={p.log2_gamma:g}  delay={p.delay:.1f}  ratio={p.ratio:.4f}")
    print("decreasing:", rep.decreasing)
    for f in write_outputs("optimality", rep, cfg):
        print("wrote", f)
