#!/usr/bin/env python3
"""Compare the isolated singular points found from seed grids G and 2G."""
import argparse

import numpy as np

from swallowtail.charpoly import model_char_poly
from swallowtail.critical_finder import FinderOptions, find_critical_points
from swallowtail.graph_model import MODEL_NAMES, builtin_model


def torus_gap(p, q) -> float:
    d = np.abs(p.b - q.b) % (2 * np.pi)
    return max(float(np.max(np.minimum(d, 2 * np.pi - d), initial=0.0)), abs(p.z - q.z))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grid", type=int, default=8)
    ap.add_argument("--tol", type=float, default=1e-6)
    ap.add_argument("models", nargs="*", default=list(MODEL_NAMES))
    args = ap.parse_args()
    for name in args.models:
        cp = model_char_poly(builtin_model(name))
        coarse = find_critical_points(cp, FinderOptions(grid=args.grid))
        fine = find_critical_points(cp, FinderOptions(grid=2 * args.grid))
        a, b = coarse.isolated_points, fine.isolated_points
        matched = sum(any(torus_gap(p, q) < args.tol for q in b) for p in a)
        status = "same" if matched == len(a) == len(b) else "DIFFERENT"
        print(f"{name:15s} G={args.grid}: {len(a):3d} isolated, G={2 * args.grid}: {len(b):3d} isolated  {status}")


if __name__ == "__main__":
    main()
