"""Paired geometric / independent Monte Carlo sweep around lambda_R*.

Set CFIDENT_WORKERS to spread trials over processes.
"""

import argparse
from pathlib import Path

from cfident.experiments import (
    ExperimentConfig,
    compare_models,
    transition_width,
    write_records_csv,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results/model_sweep.csv"))
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--half-steps", action="store_true",
                    help="factors 2^(i/2) instead of 2^i, i in -3..3")
    args = ap.parse_args()
    exps = [i / 2 for i in range(-6, 7)] if args.half_steps else range(-3, 4)
    cfg = ExperimentConfig(lambda_r_factors=tuple(2.0**e for e in exps), trials=args.trials,
                           master_seed=args.seed)
    pairs = compare_models(cfg)
    print("factor   r_id geometric   r_id independent")
    for geo, ind in pairs:
        print(f"{geo.factor:7.3f}   {geo.r_id:14.3f}   {ind.r_id:16.3f}")
    geo = [g for g, _ in pairs]
    ind = [i for _, i in pairs]
    print(f"transition width (log2 factor): geometric {transition_width(geo):.3f}, "
          f"independent {transition_width(ind):.3f}")
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_records_csv(geo + ind, str(args.out), cfg)
    print(f"-> {args.out}")


if __name__ == "__main__":
    main()
