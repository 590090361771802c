"""Monte Carlo identifiability campaigns over AP-density sweeps."""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Literal

import numpy as np
from scipy.stats import binomtest

from .deployment import sample_deployment, sample_node_counts
from .graph import PreprocessReport, from_geometric, from_independent, preprocess
from .params import NetworkParams, SeedSpec
from .peeling import peel
from .thresholds import critical_lambda_r

GraphModel = Literal["geometric", "independent"]

DEFAULT_FACTORS = tuple(2.0**i for i in range(-3, 4))
WORKERS_ENV = "CFIDENT_WORKERS"

CSV_COLUMNS = [
    "model", "d", "gamma", "lambda_t", "lambda_r", "factor", "trials", "r_id", "r_id_ci_lo",
    "r_id_ci_hi", "r_id_ue_mean", "r_id_ue_std", "pre_removed_ue_deg0", "pre_removed_ue_deg1",
    "pre_removed_ap_deg0", "seed",
]


@dataclass(frozen=True)
class ExperimentConfig:
    d: float = 1000.0
    gamma: float = 70.0
    lambda_t: float = 5e-4
    lambda_r_factors: tuple[float, ...] = DEFAULT_FACTORS
    graph_model: GraphModel = "independent"
    trials: int = 1000
    master_seed: int = 0
    base_lambda_r: float | None = None
    topology: Literal["flat", "torus"] = "flat"

    def __post_init__(self):
        object.__setattr__(self, "lambda_r_factors", tuple(float(f) for f in self.lambda_r_factors))
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if any(not f > 0 for f in self.lambda_r_factors):
            raise ValueError("factors must be positive")
        if self.graph_model not in ("geometric", "independent"):
            raise ValueError(f"unknown graph model {self.graph_model!r}")

    def resolve_base(self) -> float:
        """Base AP intensity the factors multiply: lambda_R* unless overridden."""
        if self.base_lambda_r is not None:
            return float(self.base_lambda_r)
        area = math.pi * self.gamma**2
        if self.lambda_t == 0:
            return 0.0
        res = critical_lambda_r(self.lambda_t * area, self.gamma)
        if not res.exists:
            raise ValueError(
                "no critical AP density for these parameters; supply base_lambda_r"
            )
        return res.lambda_r_crit


@dataclass(frozen=True)
class TrialOutcome:
    trial: int
    verdict: bool
    r_id_ue: float
    initial_ue: int
    core_ue: int
    core_ap: int
    pre: PreprocessReport


@dataclass
class ExperimentRecord:
    model: str
    d: float
    gamma: float
    lambda_t: float
    lambda_r: float
    factor: float
    trials: int
    r_id: float
    r_id_ci_lo: float
    r_id_ci_hi: float
    r_id_ue_mean: float
    r_id_ue_std: float
    pre_removed_ue_deg0: int
    pre_removed_ue_deg1: int
    pre_removed_ap_deg0: int
    seed: int
    mean_core_ue: float = 0.0
    mean_core_ap: float = 0.0
    wall_time: float = 0.0
    outcomes: list[TrialOutcome] | None = field(default=None, repr=False)

    @property
    def n_identifiable(self) -> int:
        return round(self.r_id * self.trials)


def wilson_interval(successes: int, n: int, level: float = 0.95) -> tuple[float, float]:
    ci = binomtest(successes, n).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


def run_trial(
    params: NetworkParams, model: GraphModel, seeds: SeedSpec, trial: int, topology="flat"
) -> TrialOutcome:
    counts_rng, layout_rng = seeds.trial_streams(trial)
    counts = sample_node_counts(params, counts_rng)
    if model == "independent":
        graph = from_independent(params, 0, layout_rng, counts=counts)
    else:
        dep = sample_deployment(params, layout_rng, counts=counts, topology=topology, max_nodes=None)
        graph = from_geometric(dep, params.gamma, 0)
    pre = preprocess(graph)
    res = peel(graph, inplace=True)
    return TrialOutcome(
        trial, res.verdict, res.r_id_ue, res.initial_ue_count, res.core_ue_count,
        res.core_ap_count, pre,
    )


def _run_chunk(args):
    params, model, master, trials, topology = args
    seeds = SeedSpec(master)
    return [run_trial(params, model, seeds, i, topology) for i in trials]


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def run_trials(params, model, master_seed, trials, topology="flat", workers=None) -> list[TrialOutcome]:
    """Outcomes for trials ``0..trials-1`` in trial order, independent of ``workers``."""
    workers = worker_count() if workers is None else workers
    idx = list(range(trials))
    if workers <= 1 or trials < 2 * workers:
        return _run_chunk((params, model, master_seed, idx, topology))
    chunks = [idx[w::workers] for w in range(workers)]
    with ProcessPoolExecutor(workers) as pool:
        parts = pool.map(_run_chunk, [(params, model, master_seed, c, topology) for c in chunks])
        out = [o for part in parts for o in part]
    return sorted(out, key=lambda o: o.trial)


def aggregate(outcomes: list[TrialOutcome], **meta) -> ExperimentRecord:
    n = len(outcomes)
    wins = sum(o.verdict for o in outcomes)
    lo, hi = wilson_interval(wins, n)
    r_ue = np.array([o.r_id_ue for o in outcomes])
    return ExperimentRecord(
        trials=n,
        r_id=wins / n,
        r_id_ci_lo=lo,
        r_id_ci_hi=hi,
        r_id_ue_mean=float(r_ue.mean()),
        r_id_ue_std=float(r_ue.std()),
        pre_removed_ue_deg0=sum(o.pre.ue_deg0 for o in outcomes),
        pre_removed_ue_deg1=sum(o.pre.ue_deg1 for o in outcomes),
        pre_removed_ap_deg0=sum(o.pre.ap_deg0 for o in outcomes),
        mean_core_ue=float(np.mean([o.core_ue for o in outcomes])),
        mean_core_ap=float(np.mean([o.core_ap for o in outcomes])),
        **meta,
    )


def run_sweep(config: ExperimentConfig, *, workers=None, keep_outcomes=False) -> list[ExperimentRecord]:
    base = config.resolve_base()
    records = []
    for factor in config.lambda_r_factors:
        lam_r = factor * base
        params = NetworkParams.single_group(config.lambda_t, lam_r, config.gamma, d=config.d)
        t0 = time.perf_counter()
        outcomes = run_trials(
            params, config.graph_model, config.master_seed, config.trials, config.topology, workers
        )
        rec = aggregate(
            outcomes,
            model=config.graph_model,
            d=config.d,
            gamma=config.gamma,
            lambda_t=config.lambda_t,
            lambda_r=lam_r,
            factor=factor,
            seed=config.master_seed,
        )
        rec.wall_time = time.perf_counter() - t0
        if keep_outcomes:
            rec.outcomes = outcomes
        records.append(rec)
    return records


def compare_models(config: ExperimentConfig, **kw) -> list[tuple[ExperimentRecord, ExperimentRecord]]:
    """Geometric and independent sweeps driven by the same per-trial seeds."""
    geo = run_sweep(replace(config, graph_model="geometric"), **kw)
    ind = run_sweep(replace(config, graph_model="independent"), **kw)
    return list(zip(geo, ind))


def transition_width(records: list[ExperimentRecord], low=0.05, high=0.95) -> float:
    """Span in log2(factor) over which r_id climbs from ``low`` to ``high``.

    Crossing points are found by linear interpolation in log2(factor) on the
    sorted sweep; NaN if the sweep never crosses both levels.
    """
    recs = sorted(records, key=lambda r: r.factor)
    x = np.log2([r.factor for r in recs])
    y = np.array([r.r_id for r in recs])

    def crossing(level, last):
        # last index at or below level (for low) / first at or above (for high)
        if last:
            below = np.flatnonzero(y <= level)
            if len(below) == 0 or below[-1] == len(y) - 1:
                return math.nan
            i = below[-1]
        else:
            above = np.flatnonzero(y >= level)
            if len(above) == 0 or above[0] == 0:
                return math.nan
            i = above[0] - 1
        y0, y1 = y[i], y[i + 1]
        if y1 == y0:
            return x[i]
        return x[i] + (level - y0) / (y1 - y0) * (x[i + 1] - x[i])

    return float(crossing(high, last=False) - crossing(low, last=True))


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def config_to_dict(config: ExperimentConfig) -> dict:
    return asdict(config)


def config_from_dict(data: dict) -> ExperimentConfig:
    data = dict(data)
    data["lambda_r_factors"] = tuple(data["lambda_r_factors"])
    return ExperimentConfig(**data)


def write_records_csv(records, fh_or_path, config: ExperimentConfig | None = None, meta=None) -> None:
    own = isinstance(fh_or_path, (str, Path))
    fh = open(fh_or_path, "w", newline="") if own else fh_or_path
    try:
        if config is not None or meta:
            header = {"config": config_to_dict(config) if config else None, **(meta or {})}
            fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for rec in records:
            d = asdict(rec)
            w.writerow([_fmt(d[c]) for c in CSV_COLUMNS])
    finally:
        if own:
            fh.close()


def read_records_csv(path) -> tuple[dict | None, list[dict]]:
    with open(path, newline="") as fh:
        first = fh.readline()
        header = None
        if first.startswith("# "):
            header = json.loads(first[2:])
        else:
            fh.seek(0)
        rows = list(csv.DictReader(fh))
    return header, rows
