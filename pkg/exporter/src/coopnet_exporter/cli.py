"""CLI: train a model pair and write the export bundle."""

import argparse
import sys

from .export import ExportError, train_and_export


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="coopnet-export")
    parser.add_argument("--task", choices=("synthetic", "cifar10-subset"), default="synthetic")
    parser.add_argument("--out-dir", default="export")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--epochs", type=int, default=4)
    parser.add_argument("--train-samples", type=int, default=4000)
    parser.add_argument("--eval-samples", type=int, default=1000)
    parser.add_argument("--noise", type=float, default=60.0)
    parser.add_argument("--golden-samples", type=int, default=4)
    parser.add_argument("--width", type=int, default=16)
    args = parser.parse_args(argv)
    try:
        bundle = train_and_export(
            task=args.task,
            out_dir=args.out_dir,
            seed=args.seed,
            epochs=args.epochs,
            train_samples=args.train_samples,
            eval_samples=args.eval_samples,
            noise=args.noise,
            golden_samples=args.golden_samples,
            width=args.width,
        )
    except ExportError as e:
        sys.stderr.write(f"export failed: {e}\n")
        return 1
    print(f"bundle written: {bundle.model_path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
