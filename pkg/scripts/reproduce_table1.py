"""Brain-ball threshold table: computed thresholds against the reference
values, plus the effective df at which each row would match.

    python3 scripts/reproduce_table1.py [--nu 110] [--alpha 0.05]
"""

import argparse

from conerft.ecdensity import StatisticSpec
from conerft.geometry import arc_cone
from conerft.inference import BRAIN_BALL, TABLE1_REFERENCE, effective_dof, table1


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nu", type=int, default=110)
    ap.add_argument("--alpha", type=float, default=0.05)
    args = ap.parse_args()

    print(f"{'row':4} {'statistic':28} {'threshold':>10} {'reference':>10} status")
    for r in table1(alpha=args.alpha, nu=args.nu):
        t = "" if r.threshold is None else f"{r.threshold:.4f}"
        status = {True: "PASS", False: "FAIL", None: "info"}[r.passed]
        print(f"{r.row:4} {r.label:28} {t:>10} {r.reference or '':>10} {status}")

    cone = arc_cone(1.06)
    makers = {
        "a": StatisticSpec.t,
        "b": lambda nu: StatisticSpec.tin(cone, nu),
        "d": lambda nu: StatisticSpec.f(2, nu, sqrt_scale=True),
    }
    print("\ndf at which each row meets its reference value:")
    for row, make in makers.items():
        nu = effective_dof(TABLE1_REFERENCE[row], BRAIN_BALL, args.alpha, make)
        print(f"  {row}: {nu:.2f}")


if __name__ == "__main__":
    main()
