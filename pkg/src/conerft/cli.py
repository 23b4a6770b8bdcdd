"""Command-line driver.

Exit codes: 0 success, 2 validation or dimension error, 3 I/O or format
error. Tables are written as CSV (nine significant digits, LF endings) to
``--out`` or stdout.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import inference, io
from .conefit import Statistic, fit_field
from .design import AnalysisConfig, build_design, synth_data
from .ecdensity import StatisticSpec
from .geometry import weights_monte_carlo
from .lattice import SearchRegion, ball_lkc_approx, lkc_top_estimate
from .validation import fplus_threshold_mc, simulate_ec_curve

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 2, 3
REGION_PRESETS = {"brain-ball": inference.BRAIN_BALL, "paper-ball": inference.BRAIN_BALL}


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _shape(text):
    return tuple(int(v) for v in text.lower().split("x"))


def _stat_from_args(args) -> StatisticSpec:
    kind = args.stat
    cone = io.parse_cone(args.cone) if getattr(args, "cone", None) else None
    if kind in ("chibar", "tin", "tlr") and cone is None:
        raise ValueError(f"--cone is required for {kind}")
    if kind == "gaussian":
        return StatisticSpec.gaussian()
    if kind == "chi":
        return StatisticSpec.chi(args.j)
    if kind == "t":
        return StatisticSpec.t(args.nu)
    if kind == "f":
        return StatisticSpec.f(args.k, args.nu, sqrt_scale=args.sqrt_scale)
    if kind == "chibar":
        return StatisticSpec.chibar(cone)
    if kind == "tin":
        return StatisticSpec.tin(cone, args.nu)
    return StatisticSpec.tlr(cone, args.n)


def _region_from_args(args) -> SearchRegion:
    if args.lkc:
        return SearchRegion(np.array(_floats(args.lkc)), voxel_volume=args.voxel_volume)
    if args.region in REGION_PRESETS:
        return REGION_PRESETS[args.region]
    if args.region.startswith("ball:"):
        return ball_lkc_approx(float(args.region[5:]), 3, voxel_volume=args.voxel_volume)
    raise ValueError(f"unknown region {args.region!r}; use brain-ball, ball:<L3> or --lkc")


def _add_stat_args(p):
    p.add_argument("--stat", required=True,
                   choices=["gaussian", "chi", "t", "f", "chibar", "tin", "tlr"])
    p.add_argument("--cone", help="arc:<alpha>, orthant:<k>, sphere:<k> or a cone JSON file")
    p.add_argument("--nu", type=int, help="residual df for t, f and tin")
    p.add_argument("--j", type=int, help="df of the chi field")
    p.add_argument("--k", type=int, help="numerator df of the F field")
    p.add_argument("--n", type=int, help="total df for tlr")
    p.add_argument("--sqrt-scale", action="store_true", help="report F on the sqrt(kF) scale")


def _add_region_args(p):
    p.add_argument("--region", default="brain-ball",
                   help="brain-ball (alias paper-ball) or ball:<top LKC>")
    p.add_argument("--lkc", help="explicit L_0,...,L_D")
    p.add_argument("--voxel-volume", type=float, default=1.0)


# --------------------------------------------------------------------------
# subcommands


def cmd_ecdensity(args):
    stat = _stat_from_args(args)
    rows = []
    for d in _ints(args.d):
        for t in _floats(args.t):
            rows.append((d, t, stat.ec_density(d, t)))
    io.write_csv(args.out, ["d", "t", "rho"], rows)


def cmd_threshold(args):
    stat = _stat_from_args(args)
    region = _region_from_args(args)
    res = inference.threshold(region, stat, args.alpha)
    io.write_csv(args.out, ["statistic", "alpha", "threshold", "expected_ec", "validity"],
                 [(stat.label(), args.alpha, res.threshold, res.expected_ec, res.validity)])
    if not res.valid:
        print(f"dimension violation: D = {region.dim} >= {stat.validity_bound}", file=sys.stderr)
        return EXIT_INVALID


def cmd_simulate_ec(args):
    cone = io.parse_cone(args.cone, args.components) if args.cone else None
    res = simulate_ec_curve(args.kind, _shape(args.shape), args.fwhm_sd, args.reps,
                            _floats(args.t), args.seed, cone=cone)
    io.write_csv(args.out, ["t", "mean_ec", "se", "expected_ec"], res.rows())
    for t, z in zip(res.thresholds, res.z_scores):
        print(f"t={t:g} z={z:+.2f} {'PASS' if abs(z) <= 3 else 'FAIL'}", file=sys.stderr)


def cmd_fit(args):
    dataset = io.read_dataset(args.dataset)
    field = fit_field(dataset, Statistic(args.stat))
    io.write_field(args.out_field, field)
    if args.threshold is not None:
        det = inference.detect(field, args.threshold, args.voxel_volume)
        rows = [(i + 1, c.size, c.volume, c.peak, "x".join(map(str, c.peak_index)))
                for i, c in enumerate(det.clusters)]
        io.write_csv(args.out, ["cluster", "voxels", "volume", "peak", "peak_index"], rows)


def cmd_lkc(args):
    dataset = io.read_dataset(args.dataset)
    top = lkc_top_estimate(dataset)
    dim = len(dataset.shape)
    region = ball_lkc_approx(top, dim, convention=args.convention)
    io.write_csv(args.out, ["d", "lkc"], list(enumerate(region.lkc)))


def cmd_reproduce_table1(args):
    fplus = None
    if args.fplus_reps:
        check = fplus_threshold_mc(inference.table1_statistics(args.nu)["b"].cone, args.nu,
                                   reps=args.fplus_reps, seed=args.seed)
        fplus = check.fplus
    rows = inference.table1(alpha=args.alpha, nu=args.nu, fplus=fplus)
    out = [(r.row, r.label, r.threshold, r.reference, r.tolerance,
            {True: "PASS", False: "FAIL", None: "info"}[r.passed], None) for r in rows]
    io.write_csv(args.out, ["row", "statistic", "threshold", "reference", "tolerance", "status",
                            "detected_volume"], out)
    nu_eff = inference.effective_dof(inference.TABLE1_REFERENCE["a"], alpha=args.alpha)
    print(f"effective df matching T threshold {inference.TABLE1_REFERENCE['a']}: {nu_eff:.2f}",
          file=sys.stderr)


def cmd_weights(args):
    cone = io.parse_cone(args.cone)
    rows = []
    if args.mc:
        w, se = weights_monte_carlo(cone.generators, args.mc, args.seed)
        for j in range(cone.span_dim + 1):
            rows.append((j, cone.weights[j], w[j], se[j]))
    else:
        rows = [(j, cone.weights[j], None, None) for j in range(cone.span_dim + 1)]
    io.write_csv(args.out, ["j", "analytic", "monte_carlo", "se"], rows)


def _load_config(path):
    return AnalysisConfig.from_json(path) if path else AnalysisConfig()


def cmd_design(args):
    cfg = _load_config(args.config)
    design, alpha = build_design(cfg)
    red = design.reduce()
    print(json.dumps({"alpha": alpha, "n": design.n, "k": red.k, "nu": red.nu,
                      "cone_columns": list(design.cone_columns)}))
    if args.out:
        header = [f"x{i}" for i in range(design.columns.shape[1])]
        io.write_csv(args.out, header, design.columns.tolist())


def _parse_activation(items):
    act = {}
    for item in items or []:
        vox, beta, delta = item.split(":")
        act[tuple(int(v) for v in vox.split(","))] = (float(beta), float(delta))
    return act


def cmd_synth(args):
    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    ds = synth_data(cfg, _parse_activation(args.activate), _shape(args.shape),
                    kernel_sd=args.kernel_sd)
    io.write_dataset(args.out, ds)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="conerft", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ecdensity", help="tabulate EC densities")
    _add_stat_args(p)
    p.add_argument("--d", default="0,1,2,3")
    p.add_argument("--t", required=True, help="comma-separated thresholds")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_ecdensity)

    p = sub.add_parser("threshold", help="expected-EC threshold for a region")
    _add_stat_args(p)
    _add_region_args(p)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("simulate-ec", help="Monte Carlo check of the expected EC")
    p.add_argument("--kind", choices=["gaussian", "chibar"], default="gaussian")
    p.add_argument("--shape", default="128x128")
    p.add_argument("--fwhm-sd", "--kernel-sd", dest="fwhm_sd", type=float, default=4.0,
                   help="Gaussian kernel sd in voxels")
    p.add_argument("--reps", type=int, default=500)
    p.add_argument("--t", default="2,2.5,3")
    p.add_argument("--cone", help="cone for --kind chibar (default orthant:2 in R^3)")
    p.add_argument("--components", type=int, default=3, help="component fields for chibar")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_simulate_ec)

    p = sub.add_parser("fit", help="voxelwise statistic field from a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--stat", choices=[s.value for s in Statistic], default="tin")
    p.add_argument("--out-field", required=True)
    p.add_argument("--threshold", type=float)
    p.add_argument("--voxel-volume", type=float, default=1.0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("lkc", help="estimate LKCs from dataset residuals")
    p.add_argument("--dataset", required=True)
    p.add_argument("--convention", choices=["fmri", "euclidean"], default="fmri")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_lkc)

    p = sub.add_parser("reproduce-table1", help="brain-ball threshold comparison")
    p.add_argument("--nu", type=int, default=110)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--fplus-reps", type=int, default=0,
                   help="Monte Carlo replications for the one-sided F row (slow)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_reproduce_table1)

    p = sub.add_parser("weights", help="chi-bar mixture weights of a cone")
    p.add_argument("--cone", required=True)
    p.add_argument("--mc", type=int, default=0, help="Monte Carlo draws (0 = analytic only)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("design", help="build the delay-cone design and report its angle")
    p.add_argument("--config", help="AnalysisConfig JSON")
    p.add_argument("--out", help="CSV of design columns")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("synth", help="synthesise a dataset")
    p.add_argument("--config", help="AnalysisConfig JSON")
    p.add_argument("--shape", default="8x8x8")
    p.add_argument("--activate", action="append", help="i,j,k:beta:delta (repeatable)")
    p.add_argument("--kernel-sd", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code = args.func(args)
    except (io.FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
