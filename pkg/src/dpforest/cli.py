"""Command line entry points.

Exit codes: 0 on success, 1 for usage problems, 2 for data or schema
validation failures, 3 for internal invariant violations.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time

import numpy as np

from .budget import BudgetLedger
from .data import load_dataset, load_schema, save_dataset, save_schema
from .errors import DataValidationError, InternalInvariantError
from .evaluation import collect_diagnostics, cross_validate, report_to_dict
from .forest import TrainConfig, build_forest, load_model, predict_batch, save_model
from .mechanism import neighbor_ratio_audit
from .synth import PRESETS, generate, generate_preset
from .tree import optimal_depth


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; route through our codes instead
    def error(self, message):
        raise _UsageError(message)


def _write_manifest(command: str, args: argparse.Namespace, outputs: list[str],
                    started: float) -> str:
    path = outputs[0] + ".manifest.json"
    arguments = {
        key: value for key, value in sorted(vars(args).items()) if key != "func"
    }
    manifest = {
        "command": command,
        "arguments": arguments,
        "seed": getattr(args, "seed", None),
        "outputs": outputs + [path],
        "duration_seconds": round(time.monotonic() - started, 6),
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=2)
        handle.write("\n")
    return path


def _cmd_gen(args) -> int:
    started = time.monotonic()
    rng = np.random.default_rng(args.seed)
    if args.preset is not None:
        if args.informative is not None or args.random is not None:
            raise _UsageError("--preset excludes --informative/--random")
        data = generate_preset(args.preset, args.n, rng)
    else:
        if args.informative is None:
            raise _UsageError("either --preset or --informative is required")
        data = generate(args.informative, args.random or 0, args.n, rng)
    save_dataset(data, args.out)
    save_schema(data.schema, args.schema_out)
    _write_manifest("gen", args, [args.out, args.schema_out], started)
    print(f"wrote {len(data)} records to {args.out}")
    return 0


def _cmd_depth(args) -> int:
    schema = load_schema(args.schema)
    print(optimal_depth(schema.num_continuous, schema.num_discrete))
    return 0


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        epsilon=args.epsilon,
        tau=args.trees,
        depth_override=args.depth,
        sensitivity_mode=args.sensitivity,
        budget_mode=args.budget,
        seed=args.seed,
    )


def _cmd_train(args) -> int:
    started = time.monotonic()
    schema = load_schema(args.schema)
    data = load_dataset(args.data, schema)
    config = _train_config(args)
    ledger = BudgetLedger(config.epsilon)
    model = build_forest(
        data,
        config,
        ledger,
        collect_diagnostics=args.diagnostics is not None,
        threads=args.threads,
    )
    save_model(model, args.out)
    outputs = [args.out]
    if args.diagnostics is not None:
        report = collect_diagnostics(model)
        with open(args.diagnostics, "w", encoding="utf-8") as handle:
            json.dump(
                {
                    "empty_leaf_fraction": {
                        "mean": report.empty_leaf_fraction_mean,
                        "std": report.empty_leaf_fraction_std,
                    },
                    "flip_fraction": report.flip_fraction,
                    "mean_smooth_sensitivity": report.mean_smooth_sensitivity,
                },
                handle,
                indent=2,
            )
            handle.write("\n")
        outputs.append(args.diagnostics)
    _write_manifest("train", args, outputs, started)
    print(
        f"trained {model.tau} trees at depth {model.depth}, "
        f"spent epsilon {float(ledger.composed_cost())}"
    )
    return 0


def _cmd_predict(args) -> int:
    started = time.monotonic()
    model = load_model(args.model)
    schema = model.schema
    if "prediction" in schema.feature_names or schema.label_column == "prediction":
        raise DataValidationError(
            "schema already uses the column name 'prediction'"
        )
    data = load_dataset(args.data, schema, require_label=False)
    codes = predict_batch(model, data)
    header = list(schema.feature_names)
    if data.has_labels:
        header.append(schema.label_column)
    header.append("prediction")
    with open(args.out, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for i, record in enumerate(data.records()):
            cells = [record.values[name] for name in schema.feature_names]
            if data.has_labels:
                cells.append(record.label)
            cells.append(schema.class_labels[int(codes[i])])
            writer.writerow(cells)
    _write_manifest("predict", args, [args.out], started)
    print(f"wrote {len(data)} predictions to {args.out}")
    return 0


def _cmd_eval(args) -> int:
    started = time.monotonic()
    schema = load_schema(args.schema)
    data = load_dataset(args.data, schema)
    config = _train_config(args)
    metrics, diagnostics = cross_validate(
        data,
        config,
        folds=args.folds,
        repeats=args.repeats,
        threads=args.threads,
    )
    report = report_to_dict(config, args.folds, args.repeats, metrics, diagnostics)
    with open(args.report, "w", encoding="utf-8") as handle:
        json.dump(report, handle, indent=2)
        handle.write("\n")
    _write_manifest("eval", args, [args.report], started)
    print(
        f"accuracy {metrics.accuracy.mean:.4f} +/- {metrics.accuracy.std:.4f} "
        f"over {args.folds}x{args.repeats} folds"
    )
    return 0


def _parse_counts(text: str) -> dict[str, int]:
    counts: dict[str, int] = {}
    for part in text.split(","):
        label, _, value = part.partition(":")
        label = label.strip()
        if not label or not value.strip():
            raise _UsageError(
                f"bad --counts entry {part!r}; expected LABEL:COUNT pairs"
            )
        if label in counts:
            raise _UsageError(f"label {label!r} repeated in --counts")
        try:
            counts[label] = int(value)
        except ValueError:
            raise _UsageError(f"count for {label!r} is not an integer") from None
    return counts


def _cmd_audit(args) -> int:
    started = time.monotonic()
    counts = _parse_counts(args.counts)
    report = neighbor_ratio_audit(
        counts, args.epsilon, sensitivity_mode=args.sensitivity
    )
    document = report.to_dict()
    if args.report is not None:
        with open(args.report, "w", encoding="utf-8") as handle:
            json.dump(document, handle, indent=2)
            handle.write("\n")
        _write_manifest("audit", args, [args.report], started)
    else:
        print(json.dumps(document, indent=2))
    print(
        f"max log ratio {document['max_log_ratio']} at epsilon {args.epsilon} "
        f"({args.sensitivity} sensitivity)",
        file=sys.stderr,
    )
    return 0


def _add_train_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", required=True, help="training CSV")
    parser.add_argument("--schema", required=True, help="schema JSON")
    parser.add_argument("--epsilon", type=float, required=True,
                        help="total privacy budget")
    parser.add_argument("--trees", type=int, default=100,
                        help="forest size (default 100)")
    parser.add_argument("--depth", type=int, default=None,
                        help="override the schema-derived tree depth")
    parser.add_argument("--sensitivity", choices=["smooth", "global"],
                        default="smooth", help="sensitivity regime")
    parser.add_argument("--budget", choices=["disjoint", "split"],
                        default="disjoint",
                        help="disjoint subsets at full budget, or shared "
                             "data at budget/trees")
    parser.add_argument("--seed", type=int, default=0, help="training seed")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads, 0 for one per cpu")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dpforest",
                     description="differentially private random forests")
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen", help="generate a synthetic benchmark")
    gen.add_argument("--preset", choices=sorted(PRESETS), default=None)
    gen.add_argument("--informative", type=int, default=None,
                     help="informative feature count (alternative to --preset)")
    gen.add_argument("--random", type=int, default=None,
                     help="noise feature count (with --informative)")
    gen.add_argument("--n", type=int, default=30000, help="records to draw")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="output CSV path")
    gen.add_argument("--schema-out", required=True, help="output schema path")
    gen.set_defaults(func=_cmd_gen)

    depth = commands.add_parser("depth", help="print the derived tree depth")
    depth.add_argument("--schema", required=True)
    depth.set_defaults(func=_cmd_depth)

    train = commands.add_parser("train", help="train a private forest")
    _add_train_flags(train)
    train.add_argument("--out", required=True, help="model JSON path")
    train.add_argument("--diagnostics", default=None,
                       help="also write a leaf diagnostics report here "
                            "(not privacy safe)")
    train.set_defaults(func=_cmd_train)

    predict = commands.add_parser("predict", help="label records with a model")
    predict.add_argument("--model", required=True)
    predict.add_argument("--data", required=True)
    predict.add_argument("--out", required=True,
                         help="CSV with an appended prediction column")
    predict.add_argument("--threads", type=int, default=1)
    predict.set_defaults(func=_cmd_predict)

    evaluate = commands.add_parser("eval", help="repeated cross-validation")
    _add_train_flags(evaluate)
    evaluate.add_argument("--folds", type=int, default=10)
    evaluate.add_argument("--repeats", type=int, default=10)
    evaluate.add_argument("--report", required=True, help="report JSON path")
    evaluate.set_defaults(func=_cmd_eval)

    audit = commands.add_parser(
        "audit", help="measure output ratios against one-record neighbours"
    )
    audit.add_argument("--counts", required=True,
                       help='label counts, e.g. "A:3,B:2"')
    audit.add_argument("--epsilon", type=float, required=True)
    audit.add_argument("--sensitivity", choices=["smooth", "global"],
                       default="smooth")
    audit.add_argument("--report", default=None, help="report JSON path")
    audit.set_defaults(func=_cmd_audit)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataValidationError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except InternalInvariantError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
