"""Density-evolution traces at lambda_T = 5e-4, gamma = 70 for three AP densities.

Writes one (iter, z) CSV per AP density and prints the verdicts.
"""

import argparse
from pathlib import Path

from cfident import density_evolution as de
from cfident.params import NetworkParams


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results/de_traces"))
    ap.add_argument("--lambda-r", type=float, nargs="+", default=[0.0036, 0.0072, 0.0144])
    ap.add_argument("--model", choices=("exact", "approximate"), default="exact")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for lam_r in args.lambda_r:
        params = NetworkParams.single_group(5e-4, lam_r, 70.0)
        trace = de.iterate(de.DEModel.from_params(params, variant=args.model))
        path = args.out / f"trace_{args.model}_{lam_r:g}.csv"
        de.write_trace_csv(trace, path)
        print(f"lambda_R={lam_r:g}: {trace.verdict}, {trace.iterations_used} iterations, "
              f"z={trace.converged_value:.6g} -> {path}")


if __name__ == "__main__":
    main()
