"""Command line: magtrain train / evaluate."""

import argparse
import logging
import sys
from pathlib import Path

from .model import Head
from .train import TrainConfig, evaluate_model, train

log = logging.getLogger(__name__)

_HEADS = {"regression": Head.REGRESSION, "classification": Head.CLASSIFICATION}


def cmd_train(args) -> int:
    cfg = TrainConfig(
        manifest=args.manifest,
        out_weights=args.out,
        head=_HEADS[args.head],
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        seed=args.seed,
        data_dir=args.data_dir,
    )
    out = train(cfg)
    print(f"weights: {out}")
    print(f"log: {cfg.log_path}")
    return 0


def cmd_evaluate(args) -> int:
    report = evaluate_model(args.weights, args.manifest, split=args.split,
                            data_dir=args.data_dir)
    print(f"head: {report.head.name.lower()}")
    print(f"images: {report.n}")
    if report.head is Head.REGRESSION:
        print(f"r2: {report.r2:.6f}")
        if args.pairs_out:
            with open(args.pairs_out, "w") as fh:
                fh.write("true_beta\tpredicted_beta\n")
                for t, p in report.pairs:
                    fh.write(f"{t:.9g}\t{p:.9g}\n")
            print(f"pairs: {args.pairs_out}")
    else:
        print(f"accuracy: {report.accuracy:.6f}")
        print(f"confusion: x->x {report.confusion[0, 0]}  "
              f"x->y {report.confusion[0, 1]}  "
              f"y->x {report.confusion[1, 0]}  "
              f"y->y {report.confusion[1, 1]}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="magtrain", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a head and export weights")
    p.add_argument("manifest", type=Path)
    p.add_argument("--head", choices=sorted(_HEADS), required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--data-dir", type=Path, default=None)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("evaluate", help="score exported weights on a split")
    p.add_argument("weights", type=Path)
    p.add_argument("manifest", type=Path)
    p.add_argument("--split", default="test")
    p.add_argument("--data-dir", type=Path, default=None)
    p.add_argument("--pairs-out", type=Path, default=None)
    p.set_defaults(fn=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.fn(args)
    except (OSError, ValueError, RuntimeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
