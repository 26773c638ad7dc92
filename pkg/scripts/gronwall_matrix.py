#!/usr/bin/env python3
"""Worst ratio phi(t) / envelope(t) over model pairs, isometries and directions (n = 3)."""

import argparse
import csv
import sys

import numpy as np

from spherecomp.jacobi import gronwall_envelope, phi_curve
from spherecomp.models import (
    bump_profile, frame, random_isometry, round_profile, synthetic_anisotropic,
    synthetic_constant, warped_geometry,
)
from spherecomp.sampling import DirectionSampler


def pairs(n):
    r = warped_geometry(round_profile(), n)
    return {
        "synthetic-1.02": synthetic_constant(1.02, n),
        "bump-1e-2": warped_geometry(bump_profile(1e-2), n),
        "anisotropic-0.05": synthetic_anisotropic(1.0, 0.05, n),
    }, r


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--directions", type=int, default=8)
    p.add_argument("--seeds", type=int, nargs="*", default=[1, 2])
    args = p.parse_args(argv)

    targets, g1 = pairs(args.n)
    isos = {"identity": np.eye(args.n)}
    isos.update({f"random-{s}": random_isometry(args.n, s) for s in args.seeds})
    U = DirectionSampler(count=args.directions).points(args.n)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["pair", "Q", "max_phi", "max_envelope", "worst_ratio"])
    for name, g2 in targets.items():
        for qname, Q in isos.items():
            worst, phi_max, env_max = 0.0, 0.0, 0.0
            for u, E in zip(U, frame(U)):
                for x in E.T:
                    env = gronwall_envelope(g1, g2, Q, u, x, detail=True)
                    phi = phi_curve(g1, g2, Q, u, x).values
                    pos = env.curve > 0
                    if np.any(pos):
                        worst = max(worst, float(np.max(phi[pos] / env.curve[pos])))
                    phi_max = max(phi_max, float(phi.max()))
                    env_max = max(env_max, env.value)
            w.writerow([name, qname, f"{phi_max:.6e}", f"{env_max:.6e}", f"{worst:.6f}"])


if __name__ == "__main__":
    main()
