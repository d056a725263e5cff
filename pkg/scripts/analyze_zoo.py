#!/usr/bin/env python3
"""Analyze every zoo model and write one JSON report per model plus a timing table."""
import argparse
import time
from pathlib import Path

from swallowtail.critical_finder import FinderOptions
from swallowtail.graph_model import MODEL_NAMES, builtin_model
from swallowtail.report import build_report, validate_report


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="reports", help="output directory")
    ap.add_argument("--grid", type=int, default=8)
    ap.add_argument("models", nargs="*", default=list(MODEL_NAMES))
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in args.models:
        t0 = time.perf_counter()
        report = build_report(builtin_model(name), FinderOptions(grid=args.grid))
        text = report.to_json()
        validate_report(report.to_dict())
        (out / f"{name}.json").write_text(text + "\n")
        print(f"{name:15s} {time.perf_counter() - t0:7.2f}s  {report.verdict}")


if __name__ == "__main__":
    main()
