#!/usr/bin/env python3
"""Sweep the bump amplitude and tabulate lambda integral, epsilon_n, deviation and verdict.

Writes one JSON report per point and ``sweep.csv`` to ``--outdir``.
"""

import argparse
import csv
import sys
from pathlib import Path

from spherecomp.config import loads
from spherecomp.pipeline import run_sweep

BASE = """
[model1]
kind = "warped-round"
n = {n}

[model2]
kind = "warped-bump"
n = {n}
beta = 1e-4

[sampler]
count = {count}
"""


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--start", type=float, default=1e-5)
    p.add_argument("--stop", type=float, default=5e-3)
    p.add_argument("--steps", type=int, default=12)
    p.add_argument("--count", type=int, default=256, help="sampled directions")
    p.add_argument("--stage", default="keylemma")
    p.add_argument("--outdir", default="out/beta_sweep")
    args = p.parse_args(argv)

    cfg = loads(BASE.format(n=args.n, count=args.count))
    rows = run_sweep(cfg, f"model2.beta={args.start}:{args.stop}:{args.steps}",
                     args.outdir, args.stage, deterministic=True)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["beta", "lambda_integral", "epsilon_n", "max_deviation", "verdict"])
    for r in rows:
        w.writerow([f"{r['value']:.3e}", f"{r['lambda_integral']:.6e}", f"{r['epsilon_n']:.6e}",
                    f"{r['max_deviation']:.6e}", r["verdict"]])
    print(f"# reports in {Path(args.outdir).resolve()}", file=sys.stderr)


if __name__ == "__main__":
    main()
