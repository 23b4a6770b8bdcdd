"""Simulated mean excursion EC against the expected EC for Gaussian and
chi-bar fields on a 2D lattice, over several seeds.

    python3 scripts/ec_validation.py [--reps 500] [--seeds 5]
"""

import argparse

import numpy as np

from conerft.geometry import orthant_cone
from conerft.validation import simulate_ec_curve


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=500)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--shape", default="128x128")
    ap.add_argument("--kernel-sd", type=float, default=4.0)
    args = ap.parse_args()
    shape = tuple(int(s) for s in args.shape.split("x"))

    for kind in ("gaussian", "chibar"):
        cone = orthant_cone(2, 3) if kind == "chibar" else None
        zs = []
        for s in range(args.seeds):
            res = simulate_ec_curve(kind, shape, args.kernel_sd, args.reps, seed=s * args.reps, cone=cone)
            zs.append(res.z_scores)
            cells = "  ".join(f"t={t:g}: {m:7.3f} vs {e:7.3f} (z {z:+.2f})"
                              for t, m, e, z in zip(res.thresholds, res.mean_ec, res.expected_ec, res.z_scores))
            print(f"{kind:8} seed {s * args.reps:5}  {cells}")
        print(f"{kind:8} mean z over seeds: {np.round(np.mean(zs, axis=0), 2)}\n")


if __name__ == "__main__":
    main()
