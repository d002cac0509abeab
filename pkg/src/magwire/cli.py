"""Command-line entry points: generate, fit, evaluate, verify."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .batch import evaluate, summarize, write_report
from .crosscheck import run_self_checks
from .dataset import DatasetSpec, generate, read_manifest
from .errors import MagwireError
from .estimate import AnalyticEstimator, BetaEstimator, initial_estimate
from .fit import minimize, objective_for
from .image import MfiImage, export_heatmap, read_mfi, snr
from .neural import CnnEstimator, load_weights

log = logging.getLogger(__name__)


def _add_weight_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--regression-weights", type=Path, default=None,
                   help="trained beta-regression weight file (.mirw)")
    p.add_argument("--classification-weights", type=Path, default=None,
                   help="trained axis-classification weight file (.mirw)")


def _estimator_from(args: argparse.Namespace) -> BetaEstimator:
    reg, cls = args.regression_weights, args.classification_weights
    if (reg is None) != (cls is None):
        raise MagwireError(
            "supply both --regression-weights and --classification-weights, "
            "or neither")
    if reg is None:
        return AnalyticEstimator()
    return CnnEstimator(load_weights(reg), load_weights(cls))


def cmd_generate(args: argparse.Namespace) -> int:
    spec = DatasetSpec(
        counts=tuple(args.counts), z0_range=tuple(args.z0),
        beta_range=tuple(args.beta), current_range=tuple(args.current),
        snr_range=tuple(args.snr), size=args.size,
        span_factor=args.span_factor, center_jitter=args.jitter,
        seed=args.seed,
    )
    manifest = generate(spec, args.out)
    print(f"wrote {sum(spec.counts)} images, manifest {manifest}")
    return 0


def cmd_fit(args: argparse.Namespace) -> int:
    img = read_mfi(args.image)
    estimator = _estimator_from(args)
    bundle = initial_estimate(img, estimator)
    obj = objective_for(img, bundle.params.axis)
    report = minimize(obj, bundle.params)
    p = report.params
    print(f"source:      {bundle.source.value}")
    print(f"axis:        {p.axis.value}")
    print(f"x0:          {p.x0:.6g} um")
    print(f"y0:          {p.y0:.6g} um")
    print(f"z0:          {p.z0:.6g} um")
    print(f"length:      {p.length:.6g} um")
    print(f"current:     {p.current:.6g} A")
    print(f"beta:        {p.beta:.6g}")
    print(f"chi2:        {report.chi2:.6g}")
    print(f"iterations:  {report.iterations}")
    print(f"evaluations: {report.evaluations}")
    print(f"converged:   {report.converged}")
    if img.noise_sigma > 0:
        print(f"snr:         {snr(img):.6g}")
    out_dir = args.out_dir if args.out_dir is not None else Path(args.image).parent
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.image).stem
    model = MfiImage(size=img.size, pitch=img.pitch, origin=img.origin,
                     data=img.data - report.residual.data,
                     noise_sigma=0.0)
    export_heatmap(model, out_dir / f"{stem}_model.pgm")
    export_heatmap(report.residual, out_dir / f"{stem}_residual.pgm")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    rows = [r for r in read_manifest(args.manifest) if r.split == args.split]
    if not rows:
        raise MagwireError(f"no rows with split {args.split!r} in manifest")
    estimator = _estimator_from(args)
    report = evaluate(rows, Path(args.manifest).parent, estimator,
                      workers=args.workers)
    write_report(report, args.out,
                 reference_resolution=args.reference_resolution)
    print(summarize(report))
    print(f"report: {args.out}")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    failures = 0
    for name, measured, tolerance, ok in run_self_checks():
        status = "PASS" if ok else "FAIL"
        print(f"{name:24s} measured={measured:.3e} tolerance={tolerance:.1e} "
              f"{status}")
        failures += not ok
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="magwire",
        description="Recover wire-segment position, depth, length and current "
                    "from magnetic field images.")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="render a labeled synthetic dataset")
    g.add_argument("--out", type=Path, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--counts", type=int, nargs=3, default=[5000, 600, 500],
                   metavar=("TRAIN", "VAL", "TEST"))
    g.add_argument("--z0", type=float, nargs=2, default=[50.0, 500.0],
                   metavar=("LO", "HI"), help="depth range, um")
    g.add_argument("--beta", type=float, nargs=2, default=[0.5, 20.0],
                   metavar=("LO", "HI"), help="length/depth range")
    g.add_argument("--current", type=float, nargs=2, default=[0.1, 5.0],
                   metavar=("LO", "HI"), help="current magnitude range, A")
    g.add_argument("--snr", type=float, nargs=2, default=[3.0, 100.0],
                   metavar=("LO", "HI"), help="target S/N range")
    g.add_argument("--size", type=int, default=64, help="pixels per side")
    g.add_argument("--span-factor", type=float, default=3.0,
                   help="frame span as a multiple of the peak separation")
    g.add_argument("--jitter", type=float, default=0.1,
                   help="pattern center jitter, fraction of the frame")
    g.set_defaults(func=cmd_generate)

    f = sub.add_parser("fit", help="fit one image and write heatmaps")
    f.add_argument("image", type=Path, help=".mfi input")
    f.add_argument("--out-dir", type=Path, default=None,
                   help="where to write model/residual heatmaps")
    _add_weight_flags(f)
    f.set_defaults(func=cmd_fit)

    e = sub.add_parser("evaluate", help="run the pipeline over a test split")
    e.add_argument("--manifest", type=Path, required=True)
    e.add_argument("--split", default="test")
    e.add_argument("--out", type=Path, required=True, help="report TSV path")
    e.add_argument("--workers", type=int, default=1)
    e.add_argument("--reference-resolution", type=float, default=None,
                   help="emit this constant resolution column, um")
    _add_weight_flags(e)
    e.set_defaults(func=cmd_evaluate)

    v = sub.add_parser("verify", help="run analytic self-checks")
    v.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (MagwireError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
