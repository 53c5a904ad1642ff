"""Command-line front end: run, sweep, report, inspect.

All commands are deterministic given identical files and flags. Errors exit
with status 1 and a single structured JSON object on stderr.
"""

import argparse
import json
import sys

from .cascade import CascadeConfig, infer, sweep_ct
from .errors import CoopNetError, NumericError
from .idx import load_images, load_labels
from .modelfile import inspect_text, load
from .perf import arm_latency, load_profile, memory_report, synthetic_profile


def _parse_ct_values(args) -> list[float]:
    if args.ct_list is not None:
        try:
            return [float(v) for v in args.ct_list.split(",") if v.strip() != ""]
        except ValueError:
            raise NumericError(f"--ct-list must be comma-separated reals, got {args.ct_list!r}")
    if args.ct_range is not None:
        parts = args.ct_range.split(":")
        if len(parts) != 3:
            raise NumericError("--ct-range must be start:end:step")
        try:
            start, end, step = (float(p) for p in parts)
        except ValueError:
            raise NumericError(f"--ct-range fields must be reals, got {args.ct_range!r}")
        if step <= 0:
            raise NumericError("--ct-range step must be positive")
        values = []
        k = 0
        while True:
            v = round(start + k * step, 10)
            if v >= end - 1e-12:
                break
            values.append(v)
            k += 1
        if not values:
            raise NumericError("--ct-range produced no values")
        return values
    raise NumericError("one of --ct-list or --ct-range is required")


def _profile_for(model, path):
    if path is None:
        return synthetic_profile(model), "synthetic"
    return load_profile(path), str(path)


def cmd_run(args) -> int:
    model = load(args.model)
    images = load_images(args.input)
    cfg = CascadeConfig(args.ct)
    for i in range(images.shape[0]):
        pred = infer(model, images[i], cfg)
        record = {
            "sample": i,
            "class": pred.top1,
            "probs": [float(p) for p in pred.probs],
            "cs": float(pred.cs),
            "source": pred.source,
        }
        if model.class_labels:
            record["class_label"] = model.class_labels[pred.top1]
        sys.stdout.write(json.dumps(record, sort_keys=True) + "\n")
    return 0


def _format_row(row) -> str:
    return ",".join(
        f"{v:.6f}"
        for v in (row.ct, row.accuracy, row.delta_vs_int8, row.forwarded_fraction, row.avg_speedup)
    )


def cmd_sweep(args) -> int:
    model = load(args.model)
    images = load_images(args.dataset)
    labels = load_labels(args.labels)
    profile, _ = _profile_for(model, args.profile)
    ct_values = _parse_ct_values(args)
    rows = sweep_ct(model, images, labels, ct_values, profile)
    lines = ["ct,accuracy,delta_int8,forwarded_fraction,avg_speedup"]
    lines += [_format_row(r) for r in rows]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_report(args) -> int:
    model = load(args.model)
    profile, source = _profile_for(model, args.profile)
    mem = memory_report(model)
    payload = {
        "memory": mem.to_dict(),
        "latency": {
            "l_bnn": arm_latency(model.bnn, profile),
            "l_int8": arm_latency(model.int8, profile),
            "l_cs": profile.l_cs,
            "profile_source": source,
        },
    }
    sys.stdout.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_inspect(args) -> int:
    model = load(args.model)
    sys.stdout.write(inspect_text(model) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coopnet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="classify IDX images, one JSON line per sample")
    p_run.add_argument("model")
    p_run.add_argument("input")
    p_run.add_argument("--ct", type=float, default=0.0, help="confidence threshold in [0, 1)")
    p_run.set_defaults(fn=cmd_run)

    p_sweep = sub.add_parser("sweep", help="evaluate a grid of confidence thresholds, CSV output")
    p_sweep.add_argument("model")
    p_sweep.add_argument("dataset")
    p_sweep.add_argument("labels")
    group = p_sweep.add_mutually_exclusive_group(required=True)
    group.add_argument("--ct-list", help="comma-separated thresholds")
    group.add_argument("--ct-range", help="start:end:step grid (end exclusive)")
    p_sweep.add_argument("--profile", help="latency profile JSON (default: synthetic)")
    p_sweep.add_argument("--out", help="CSV destination (default: stdout)")
    p_sweep.set_defaults(fn=cmd_sweep)

    p_report = sub.add_parser("report", help="memory footprint and arm latencies as JSON")
    p_report.add_argument("model")
    p_report.add_argument("--profile", help="latency profile JSON (default: synthetic)")
    p_report.set_defaults(fn=cmd_report)

    p_inspect = sub.add_parser("inspect", help="human-readable model summary")
    p_inspect.add_argument("model")
    p_inspect.set_defaults(fn=cmd_inspect)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except CoopNetError as e:
        sys.stderr.write(json.dumps({"error": type(e).__name__, "message": str(e)}) + "\n")
        return 1
    except OSError as e:
        sys.stderr.write(json.dumps({"error": "OSError", "message": str(e)}) + "\n")
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
