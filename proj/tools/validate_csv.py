#!/usr/bin/env python3
"""Schema checks for the CSV files written by the rwsl tool."""

import argparse
import csv
import math
import sys

METRICS = ["accuracy", "nmi", "ari", "macro_f1", "modularity", "conductance"]
BENCH_HEADER = ["n_nodes", "filter_s", "train_s", "total_s", "n_edges", "train_loop_peak_mb",
                "train_stage_peak_mb", "status", "error"]


def finite(cell):
    try:
        return math.isfinite(float(cell))
    except ValueError:
        return False


def check_sweep(rows, values=None):
    header, body = rows[0], rows[1:]
    if header[1:] != ["metric", "mean", "std", "n_runs", "std_valid"]:
        return f"unexpected sweep header {header}"
    seen = {}
    for i, row in enumerate(body, start=2):
        if len(row) != 6 or any(c == "" for c in row):
            return f"line {i}: expected 6 populated cells"
        if not all(finite(row[j]) for j in (0, 2, 3)):
            return f"line {i}: non-numeric value"
        if row[1] not in METRICS or row[5] not in ("0", "1"):
            return f"line {i}: bad metric name or std_valid flag"
        seen.setdefault(float(row[0]), []).append(row[1])
    for v, names in seen.items():
        if sorted(names) != sorted(METRICS):
            return f"value {v}: metrics {names}"
    if values is not None and sorted(seen) != sorted(values):
        return f"values {sorted(seen)} != {sorted(values)}"
    return None


def check_bench(rows):
    if rows[0] != BENCH_HEADER:
        return f"unexpected bench header {rows[0]}"
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(BENCH_HEADER):
            return f"line {i}: expected {len(BENCH_HEADER)} cells"
        if row[7] == "ok" and not all(finite(c) for c in row[:7]):
            return f"line {i}: non-numeric cell"
    return None


def check_metrics(rows):
    if rows[0] != ["run", "seed"] + METRICS:
        return f"unexpected metrics header {rows[0]}"
    if [r[0] for r in rows[-2:]] != ["mean", "std"]:
        return "missing mean/std rows"
    for i, row in enumerate(rows[1:], start=2):
        if not all(finite(c) for c in row[2:]):
            return f"line {i}: non-numeric metric"
    return None


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("kind", choices=["sweep", "bench", "metrics"])
    ap.add_argument("path")
    ap.add_argument("--values", type=lambda s: [float(v) for v in s.split(",")],
                    help="sweep values that must all be present")
    args = ap.parse_args()
    with open(args.path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        err = "empty file"
    elif args.kind == "sweep":
        err = check_sweep(rows, args.values)
    elif args.kind == "bench":
        err = check_bench(rows)
    else:
        err = check_metrics(rows)
    if err:
        print(f"{args.path}: {err}", file=sys.stderr)
        return 1
    print(f"{args.path}: ok ({len(rows) - 1} rows)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
