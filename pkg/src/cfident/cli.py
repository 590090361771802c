"""Command-line entry point: ``cfident <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict

import numpy as np

from . import __version__
from . import density_evolution as de
from .experiments import ExperimentConfig, compare_models, run_sweep, write_records_csv
from .params import NetworkParams, derive_density_params
from .thresholds import DEFAULT_RADII, critical_lambda_r, min_pilots, region_curve, write_region_csv


def _num(v):
    """12 significant digits for floats; NaN/inf become null (JSON has no NaN)."""
    if isinstance(v, bool) or v is None:
        return v
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            return None
        return float(f"{v:.12g}")
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, dict):
        return {k: _num(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_num(x) for x in v]
    return v


def _document(inputs: dict, outputs: dict, seed=None) -> dict:
    return {
        "inputs": inputs,
        "outputs": _num(outputs),
        "meta": {"version": __version__, "seed": seed},
    }


class _Output:
    def __init__(self, path):
        self.path = path

    def __enter__(self):
        self.fh = sys.stdout if self.path in (None, "-") else open(self.path, "w", newline="")
        return self.fh

    def __exit__(self, *exc):
        if self.fh is not sys.stdout:
            self.fh.close()


def _emit_json(doc, path):
    with _Output(path) as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _model(args) -> de.DEModel:
    params = NetworkParams.single_group(args.lambda_t, args.lambda_r, args.gamma)
    dp = derive_density_params(params)
    variant = "exact" if args.model == "exact" else "approximate"
    if variant == "exact":
        return de.DEModel.exact(dp.big_lambda_t, dp.big_lambda_r)
    return de.DEModel.approximate(dp.big_lambda_t, dp.big_lambda_r)


def cmd_de_trace(args):
    model = _model(args)
    trace = de.iterate(model, tol=args.tol, max_iter=args.max_iter)
    inputs = {
        "lambda_t": args.lambda_t, "lambda_r": args.lambda_r, "gamma": args.gamma,
        "model": args.model, "tol": args.tol, "max_iter": args.max_iter,
    }
    summary = {
        "verdict": trace.verdict,
        "iterations": trace.iterations_used,
        "epsilon_delta": model.epsilon_delta,
        "big_lambda_t_tilde": model.big_lambda_t_tilde,
        # exact repr so the limit survives a round trip bit for bit
        "converged_value_repr": repr(trace.converged_value),
    }
    if args.format == "json":
        doc = _document(inputs, {**summary, "converged_value": trace.converged_value,
                                 "iterates": trace.iterates})
        _emit_json(doc, args.output)
        return 0
    with _Output(args.output) as fh:
        header = {"inputs": inputs, "outputs": summary, "meta": {"version": __version__}}
        fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        fh.write("iter,z\n")
        for i, z in enumerate(trace.iterates, start=1):
            fh.write(f"{i},{z:.12g}\n")
    return 0


def cmd_classify(args):
    model = _model(args)
    verdict = de.classify(model, grid_points=args.grid_points)
    inputs = {"lambda_t": args.lambda_t, "lambda_r": args.lambda_r, "gamma": args.gamma,
              "model": args.model, "grid_points": args.grid_points}
    _emit_json(_document(inputs, {"verdict": verdict, **asdict(model)}), args.output)
    return 0


def cmd_threshold(args):
    big_t = args.lambda_t * math.pi * args.gamma**2
    res = critical_lambda_r(big_t, args.gamma)
    inputs = {"lambda_t": args.lambda_t, "gamma": args.gamma}
    _emit_json(_document(inputs, asdict(res)), args.output)
    return 0


def cmd_region(args):
    if args.log:
        grid = np.geomspace(args.lambda_t_min, args.lambda_t_max, args.steps)
    else:
        grid = np.linspace(args.lambda_t_min, args.lambda_t_max, args.steps)
    rows = [row for g in args.gamma for row in region_curve(g, grid)]
    inputs = {"gamma": args.gamma, "lambda_t_min": args.lambda_t_min,
              "lambda_t_max": args.lambda_t_max, "steps": args.steps, "log": args.log}
    if args.format == "json":
        _emit_json(_document(inputs, {"rows": [asdict(r) for r in rows]}), args.output)
        return 0
    with _Output(args.output) as fh:
        fh.write("# " + json.dumps({"inputs": inputs, "meta": {"version": __version__}},
                                   sort_keys=True) + "\n")
        write_region_csv(rows, fh)
    return 0


def cmd_pilots(args):
    res = min_pilots(args.lambda_t_total, args.lambda_r, args.gamma)
    inputs = {"lambda_t_total": args.lambda_t_total, "lambda_r": args.lambda_r,
              "gamma": args.gamma}
    _emit_json(_document(inputs, asdict(res)), args.output)
    return 0


def _config(args, model) -> ExperimentConfig:
    return ExperimentConfig(
        d=args.d, gamma=args.gamma, lambda_t=args.lambda_t,
        lambda_r_factors=tuple(args.factors), graph_model=model, trials=args.trials,
        master_seed=args.seed, base_lambda_r=args.base_lambda_r, topology=args.topology,
    )


def _emit_records(records, config, args):
    if args.format == "json":
        doc = _document(asdict(config), {"records": [
            {k: v for k, v in asdict(r).items() if k not in ("outcomes", "wall_time")}
            for r in records]}, seed=config.master_seed)
        _emit_json(doc, args.output)
        return
    with _Output(args.output) as fh:
        write_records_csv(records, fh, config, meta={"version": __version__})


def cmd_simulate(args):
    config = _config(args, args.model)
    _emit_records(run_sweep(config), config, args)
    return 0


def cmd_compare(args):
    config = _config(args, "independent")
    pairs = compare_models(config)
    _emit_records([r for pair in pairs for r in pair], config, args)
    return 0


def cmd_oracle_check(args):
    from .graph import BipartiteGraph, preprocess
    from .oracle import build_instance, local_identifiability
    from .peeling import peel

    rng = np.random.default_rng(args.seed)
    tally = {"instances": 0, "empty_core": 0, "empty_core_full_rank": 0,
             "nonempty_core": 0, "nonempty_core_full_rank": 0}
    while tally["instances"] < args.instances:
        n_ap, n_ue = int(rng.integers(1, 9)), int(rng.integers(1, 6))
        mask = rng.random((n_ap, n_ue)) < args.density
        g = BipartiteGraph(n_ap, n_ue, *np.nonzero(mask))
        preprocess(g)
        if not g.ue_alive.any():
            continue
        res = peel(g)
        inst = build_instance(g, int(g.ue_alive.sum()) + 2, rng)
        full = local_identifiability(inst).full_rank
        key = "empty_core" if res.verdict else "nonempty_core"
        tally["instances"] += 1
        tally[key] += 1
        tally[key + "_full_rank"] += int(full)
    tally["violations"] = tally["empty_core"] - tally["empty_core_full_rank"]
    _emit_json(_document({"instances": args.instances, "density": args.density},
                         tally, seed=args.seed), args.output)
    return 0 if tally["violations"] == 0 else 1


def _positive(kind):
    def conv(s):
        v = kind(s)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {s}")
        return v
    return conv


def _nonneg(s):
    v = float(s)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {s}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cfident", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def out(p, formats=("json",)):
        p.add_argument("-o", "--output", default=None, help="output file (default stdout)")
        p.add_argument("--format", choices=formats, default=formats[0])

    p = sub.add_parser("de-trace", help="density-evolution iterates")
    p.add_argument("--lambda-t", type=_nonneg, required=True)
    p.add_argument("--lambda-r", type=_nonneg, required=True)
    p.add_argument("--gamma", type=_positive(float), required=True)
    p.add_argument("--model", choices=("exact", "approx"), default="exact")
    p.add_argument("--tol", type=_positive(float), default=de.TOL)
    p.add_argument("--max-iter", type=_positive(int), default=de.MAX_ITER)
    out(p, ("csv", "json"))
    p.set_defaults(func=cmd_de_trace)

    p = sub.add_parser("classify", help="grid-based fixed-point classification")
    p.add_argument("--lambda-t", type=_nonneg, required=True)
    p.add_argument("--lambda-r", type=_nonneg, required=True)
    p.add_argument("--gamma", type=_positive(float), required=True)
    p.add_argument("--model", choices=("exact", "approx"), default="exact")
    p.add_argument("--grid-points", type=int, default=10_000)
    out(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("threshold", help="critical AP density (closed form)")
    p.add_argument("--lambda-t", type=_positive(float), required=True)
    p.add_argument("--gamma", type=_positive(float), required=True)
    out(p)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("region", help="identifiability region boundary curves")
    p.add_argument("--gamma", type=_positive(float), nargs="+", default=list(DEFAULT_RADII))
    p.add_argument("--lambda-t-min", type=_positive(float), default=1e-4)
    p.add_argument("--lambda-t-max", type=_positive(float), default=2e-3)
    p.add_argument("--steps", type=_positive(int), default=50)
    p.add_argument("--log", action="store_true", help="geometric lambda_t spacing")
    out(p, ("csv", "json"))
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("pilots", help="minimum number of pilot sequences")
    p.add_argument("--lambda-t-total", type=_positive(float), required=True)
    p.add_argument("--lambda-r", type=_positive(float), required=True)
    p.add_argument("--gamma", type=_positive(float), required=True)
    out(p)
    p.set_defaults(func=cmd_pilots)

    for name, func, helptext in (
        ("simulate", cmd_simulate, "Monte Carlo sweep over AP-density factors"),
        ("compare", cmd_compare, "geometric vs independent sweeps with paired seeds"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--d", type=_positive(float), default=1000.0)
        p.add_argument("--gamma", type=_positive(float), default=70.0)
        p.add_argument("--lambda-t", type=_nonneg, default=5e-4)
        p.add_argument("--factors", type=_positive(float), nargs="+",
                       default=[2.0**i for i in range(-3, 4)])
        if name == "simulate":
            p.add_argument("--model", choices=("independent", "geometric"), default="independent")
        p.add_argument("--trials", type=_positive(int), default=1000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--base-lambda-r", type=_positive(float), default=None)
        p.add_argument("--topology", choices=("flat", "torus"), default="flat")
        out(p, ("csv", "json"))
        p.set_defaults(func=func)

    p = sub.add_parser("oracle-check", help=argparse.SUPPRESS)
    p.add_argument("--instances", type=_positive(int), default=100)
    p.add_argument("--density", type=float, default=0.4)
    p.add_argument("--seed", type=int, default=0)
    out(p)
    p.set_defaults(func=cmd_oracle_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"cfident {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
