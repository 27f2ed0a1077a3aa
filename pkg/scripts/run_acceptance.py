#!/usr/bin/env python3
"""Run the acceptance suite and print one line per criterion.

    python3 scripts/run_acceptance.py            # full size, a few minutes
    python3 scripts/run_acceptance.py --quick    # smaller trial counts
    python3 scripts/run_acceptance.py --only 6,9
"""
import argparse
import sys

from markov_cusum.acceptance import DEFAULT_SEED, run_all

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true")
    ap.add_argument("--only", type=lambda s: [int(t) for t in s.split(",")])
    ap.add_argument("--seed", type=int, default=DEFAULT_SEED)
    args = ap.parse_args()
    results = run_all(args.quick, args.seed, args.only, sys.stdout)
    sys.exit(0 if all(r.passed for r in results) else 1)
