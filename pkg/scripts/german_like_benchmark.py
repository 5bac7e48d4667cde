"""Full 6 x 3 benchmark on a German Credit CSV, or on a surrogate with the same shape.

Usage:
  python3 scripts/german_like_benchmark.py --out results/german
  python3 scripts/german_like_benchmark.py --csv german.csv --schema german_schema.json --out results/german
"""

import argparse
import tempfile
from pathlib import Path

from hetfair.dataset import save_schema
from hetfair.fixtures import write_german_like_csv
from hetfair.harness import ExperimentPlan, render_tables, run_experiment, write_report


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--csv")
    ap.add_argument("--schema")
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    ap.add_argument("--out", default="results/german")
    args = ap.parse_args()

    if bool(args.csv) != bool(args.schema):
        ap.error("--csv and --schema go together")
    tmp = None
    if not args.csv:
        tmp = tempfile.TemporaryDirectory()
        args.csv, args.schema = f"{tmp.name}/german.csv", f"{tmp.name}/schema.json"
        save_schema(write_german_like_csv(args.csv), args.schema)

    plan = ExperimentPlan(data=args.csv, schema=args.schema, seeds=args.seeds)
    print(plan.describe())
    report = run_experiment(plan)
    write_report(report, Path(args.out), ("text", "csv", "markdown"))
    print(render_tables(report, "text"), end="")
    if tmp:
        tmp.cleanup()


if __name__ == "__main__":
    main()
