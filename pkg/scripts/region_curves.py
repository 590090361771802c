"""Identifiability-region boundaries lambda_R*(lambda_T) for several radii."""

import argparse
from pathlib import Path

import numpy as np

from cfident.thresholds import DEFAULT_RADII, region_curve, write_region_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results/region_curves.csv"))
    ap.add_argument("--gamma", type=float, nargs="+", default=list(DEFAULT_RADII))
    ap.add_argument("--lambda-t-max", type=float, default=2e-3)
    ap.add_argument("--steps", type=int, default=200)
    args = ap.parse_args()
    grid = np.linspace(args.lambda_t_max / args.steps, args.lambda_t_max, args.steps)
    rows = [row for g in args.gamma for row in region_curve(g, grid)]
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_region_csv(rows, str(args.out))
    for g in args.gamma:
        pts = [r for r in rows if r.gamma == g and r.exists]
        if pts:
            print(f"gamma={g:g}: {len(pts)} points, lambda_R* from {pts[0].lambda_r_crit:.4g} "
                  f"to {pts[-1].lambda_r_crit:.4g}")
        else:
            print(f"gamma={g:g}: no threshold on this grid")
    print(f"-> {args.out}")


if __name__ == "__main__":
    main()
