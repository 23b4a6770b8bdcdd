"""Analytic chi-bar weights against NNLS Monte Carlo for the built-in
cones and a batch of random polyhedral cones.

    python3 scripts/weights_check.py [--samples 100000] [--random 20]
"""

import argparse
import math

import numpy as np

from conerft.geometry import arc_cone, orthant_cone, polyhedral_cone, sphere_cone, weights_monte_carlo


def report(name, exact, w, se, exact_se=None):
    k = len(w)
    if exact_se is not None:  # the reference is itself simulated
        se = np.sqrt(se**2 + exact_se[:k] ** 2)
    z = np.where(se > 0, (w - exact[:k]) / np.where(se > 0, se, 1.0), 0.0)
    print(f"{name:22} max|z| {np.abs(z).max():5.2f}   " + " ".join(f"{p:.4f}" for p in exact[:k]))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=100_000)
    ap.add_argument("--random", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    named = {"quarter circle": arc_cone(math.pi / 2), "arc 1.06": arc_cone(1.06),
             **{f"orthant {k}": orthant_cone(k) for k in range(1, 5)}, "sphere 3": sphere_cone(3)}
    for name, cone in named.items():
        w, se = weights_monte_carlo(cone.generators, args.samples, args.seed)
        report(name, cone.weights, w, se)

    rng = np.random.default_rng(args.seed)
    for i in range(args.random):
        G = rng.standard_normal((int(rng.integers(1, 7)), int(rng.integers(2, 9))))
        cone = polyhedral_cone(G, mc_samples=args.samples, seed=args.seed + 1)
        w, se = weights_monte_carlo(G, args.samples, args.seed + 2 + i)
        tag = "exact" if cone.exact else "mc"
        report(f"random {i:2} ({G.shape[0]}x{G.shape[1]}, {tag})", cone.weights, w, se, cone.weights_se)


if __name__ == "__main__":
    main()
