"""Command line entry point: ``hetfair {inspect,oversample,benchmark,compare}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from hetfair.dataset import describe, load_csv, load_schema, save_csv
from hetfair.errors import HetfairError, ValidationError
from hetfair.harness import (
    ALL_CLASSIFIERS,
    ALL_TECHNIQUES,
    ExperimentPlan,
    cluster_summary,
    load_plan,
    render_tables,
    run_experiment,
    write_report,
)
from hetfair.oversample import OversamplerConfig, Technique, oversample

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2


def _cmd_inspect(args) -> int:
    ds = load_csv(args.input, load_schema(args.schema))
    info = describe(ds)
    if args.json:
        print(json.dumps(info, indent=2))
        return EXIT_OK
    print(f"N={info['N']} D={info['D']} M={info['M']}")
    print(f"class distribution (1/0): {info['class_distribution']}")
    print(f"group distribution: {info['group_distribution']}  ({', '.join(info['group_names'])})")
    print("cluster    size  imbalance")
    for key, size in info["cluster_sizes"].items():
        print(f"({key})".ljust(10) + f"{size:>5}  {info['imbalance_degrees'][key]:>9}")
    return EXIT_OK


def _cmd_oversample(args) -> int:
    ds = load_csv(args.input, load_schema(args.schema))
    cfg = OversamplerConfig(technique=args.technique, k=args.k, seed=args.seed, pin_protected=not args.no_pin)
    aug, batch = oversample(ds, cfg)
    synthetic = np.r_[np.zeros(ds.n, dtype=bool), np.ones(len(batch), dtype=bool)]
    technique = ["original"] * ds.n + list(batch.tags)
    save_csv(aug, args.output, synthetic=synthetic, technique=technique)
    for row in cluster_summary(ds, batch):
        fb = ",".join(row["fallbacks"]) or "-"
        print(
            f"cluster y={row['cluster'][0]} g={row['group_name']}: original={row['original']} "
            f"generated={row['generated']} fallbacks={fb}"
        )
    return EXIT_OK


def _run_plan(plan: ExperimentPlan, out_dir, formats) -> int:
    report = run_experiment(plan)
    if out_dir:
        for p in write_report(report, out_dir, formats):
            print(f"wrote {p}", file=sys.stderr)
    print(render_tables(report, "text"), end="")
    return EXIT_OK


def _cmd_benchmark(args) -> int:
    plan = load_plan(args.plan)
    return _run_plan(plan, args.output_dir or plan.output_dir, plan.formats)


def _cmd_compare(args) -> int:
    plan = ExperimentPlan(
        data=args.input,
        schema=args.schema,
        techniques=ALL_TECHNIQUES,
        classifiers=ALL_CLASSIFIERS,
        k=args.k,
        folds=args.folds,
        seeds=args.seeds,
        pin_protected=not args.no_pin,
    )
    return _run_plan(plan, args.output_dir, args.formats)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hetfair", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inspect", help="dataset characteristics and cluster imbalance degrees")
    p.add_argument("--input", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=_cmd_inspect)

    p = sub.add_parser("oversample", help="write an augmented CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--technique", default="HeteroFair", choices=[t.value for t in Technique])
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.add_argument("--no-pin", action="store_true", help="interpolate protected feature columns too")
    p.set_defaults(func=_cmd_oversample)

    p = sub.add_parser("benchmark", help="run an experiment plan file")
    p.add_argument("--plan", required=True)
    p.add_argument("--output-dir", default=None, help="overrides the plan's output_dir")
    p.set_defaults(func=_cmd_benchmark)

    p = sub.add_parser("compare", help="benchmark all techniques and classifiers")
    p.add_argument("--input", required=True)
    p.add_argument("--schema", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    p.add_argument("--output-dir", default=None)
    p.add_argument("--formats", nargs="+", default=["text", "csv", "markdown"])
    p.add_argument("--no-pin", action="store_true")
    p.set_defaults(func=_cmd_compare)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except HetfairError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
