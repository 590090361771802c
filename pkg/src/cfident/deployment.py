"""PPP deployments over the D x D square and fixed-radius AP/UE neighbour search."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

from .params import MAX_EXPECTED_NODES, NetworkParams

Topology = Literal["flat", "torus"]


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class NodeCounts:
    n_ap: int
    n_ue: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class Deployment:
    ap_positions: np.ndarray  # (n_ap, 2)
    ue_positions: np.ndarray  # (n_ue, 2)
    ue_group: np.ndarray  # (n_ue,), 1-based pilot group
    region: float
    topology: Topology = "flat"

    @property
    def n_ap(self) -> int:
        return len(self.ap_positions)

    @property
    def n_ue(self) -> int:
        return len(self.ue_positions)

    def group(self, p: int) -> np.ndarray:
        """Indices of UEs in pilot group ``p`` (1-based)."""
        return np.flatnonzero(self.ue_group == p)


def check_budget(params: NetworkParams, max_nodes: float | None = MAX_EXPECTED_NODES) -> None:
    if max_nodes is not None and params.expected_nodes > max_nodes:
        raise BudgetExceeded(
            f"expected {params.expected_nodes:.3g} nodes exceeds budget {max_nodes:.3g}; "
            "raise max_nodes to override"
        )


def sample_node_counts(params: NetworkParams, rng: np.random.Generator) -> NodeCounts:
    area = params.d**2
    n_ap = int(rng.poisson(params.lambda_r * area))
    n_ue = tuple(int(rng.poisson(lam * area)) for lam in params.lambda_t_groups)
    return NodeCounts(n_ap, n_ue)


def sample_deployment(
    params: NetworkParams,
    rng: np.random.Generator,
    *,
    counts: NodeCounts | None = None,
    topology: Topology = "flat",
    max_nodes: float | None = MAX_EXPECTED_NODES,
) -> Deployment:
    """Draw AP and per-group UE positions uniformly in ``[0, D]^2``.

    ``counts`` may be supplied to share Poisson node-count draws between graph
    models; otherwise they are drawn from ``rng`` first.
    """
    check_budget(params, max_nodes)
    if counts is None:
        counts = sample_node_counts(params, rng)
    d = params.d
    ap = rng.uniform(0.0, d, size=(counts.n_ap, 2))
    ue = rng.uniform(0.0, d, size=(sum(counts.n_ue), 2))
    group = np.repeat(np.arange(1, len(counts.n_ue) + 1), counts.n_ue)
    return Deployment(ap, ue, group, d, topology)


def _within(dx: np.ndarray, dy: np.ndarray, gamma: float, period: float | None) -> np.ndarray:
    dx = np.abs(dx)
    dy = np.abs(dy)
    if period is not None:
        dx = np.minimum(dx, period - dx)
        dy = np.minimum(dy, period - dy)
    return dx * dx + dy * dy <= gamma * gamma


def brute_force_pairs(ap, ue, gamma, region=None, topology="flat"):
    """All (ap, ue) pairs within ``gamma`` by exhaustive comparison."""
    ap = np.asarray(ap, float).reshape(-1, 2)
    ue = np.asarray(ue, float).reshape(-1, 2)
    period = region if topology == "torus" else None
    mask = _within(
        ap[:, None, 0] - ue[None, :, 0], ap[:, None, 1] - ue[None, :, 1], gamma, period
    )
    a, u = np.nonzero(mask)
    return a.astype(np.int64), u.astype(np.int64)


def pairs_within(ap, ue, gamma, region, topology: Topology = "flat"):
    """(ap_index, ue_index) pairs at distance <= gamma, sorted by AP then UE.

    Uses a uniform grid with cells at least ``gamma`` wide so that every
    neighbour lies in the surrounding 3x3 block of cells.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    ap = np.asarray(ap, float).reshape(-1, 2)
    ue = np.asarray(ue, float).reshape(-1, 2)
    n_cells = max(1, int(region // gamma))
    torus = topology == "torus"
    if len(ap) == 0 or len(ue) == 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    if n_cells < 3:
        # 3x3 block covers (or, on a torus, revisits) the whole grid
        return brute_force_pairs(ap, ue, gamma, region, topology)
    cell = region / n_cells
    period = region if torus else None

    def cell_of(pts):
        return np.clip((pts // cell).astype(np.int64), 0, n_cells - 1)

    ue_c = cell_of(ue)
    ue_key = ue_c[:, 0] * n_cells + ue_c[:, 1]
    order = np.argsort(ue_key, kind="stable")
    counts = np.bincount(ue_key, minlength=n_cells * n_cells)
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))

    ap_c = cell_of(ap)
    ap_ids = np.arange(len(ap))
    found_a, found_u = [], []
    for ox in (-1, 0, 1):
        for oy in (-1, 0, 1):
            cx = ap_c[:, 0] + ox
            cy = ap_c[:, 1] + oy
            if torus:
                cx %= n_cells
                cy %= n_cells
                ok = np.ones(len(ap), bool)
            else:
                ok = (cx >= 0) & (cx < n_cells) & (cy >= 0) & (cy < n_cells)
            key = cx[ok] * n_cells + cy[ok]
            cnt = counts[key]
            total = int(cnt.sum())
            if total == 0:
                continue
            a = np.repeat(ap_ids[ok], cnt)
            offs = np.arange(total) - np.repeat(np.cumsum(cnt) - cnt, cnt)
            u = order[np.repeat(starts[key], cnt) + offs]
            hit = _within(ap[a, 0] - ue[u, 0], ap[a, 1] - ue[u, 1], gamma, period)
            found_a.append(a[hit])
            found_u.append(u[hit])
    if not found_a:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    a = np.concatenate(found_a)
    u = np.concatenate(found_u)
    idx = np.argsort(a * len(ue) + u)
    return a[idx], u[idx]


def neighbors_within(deployment: Deployment, gamma: float, ue_subset: np.ndarray | None = None):
    """AP/UE index pairs of ``deployment`` within ``gamma``.

    With ``ue_subset`` the UE indices returned are positions within the subset.
    """
    ue = deployment.ue_positions if ue_subset is None else deployment.ue_positions[ue_subset]
    return pairs_within(
        deployment.ap_positions, ue, gamma, deployment.region, deployment.topology
    )


def write_deployment_csv(deployment: Deployment, path) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "x", "y", "group"])
        for x, y in deployment.ap_positions:
            w.writerow(["ap", repr(float(x)), repr(float(y)), ""])
        for (x, y), g in zip(deployment.ue_positions, deployment.ue_group):
            w.writerow(["ue", repr(float(x)), repr(float(y)), int(g)])


def read_deployment_csv(path, region: float, topology: Topology = "flat") -> Deployment:
    ap, ue, grp = [], [], []
    with open(Path(path), newline="") as fh:
        for row in csv.DictReader(fh):
            pt = (float(row["x"]), float(row["y"]))
            if row["kind"] == "ap":
                ap.append(pt)
            elif row["kind"] == "ue":
                ue.append(pt)
                grp.append(int(row["group"]))
            else:
                raise ValueError(f"unknown node kind {row['kind']!r}")
    return Deployment(
        np.asarray(ap, float).reshape(-1, 2),
        np.asarray(ue, float).reshape(-1, 2),
        np.asarray(grp, np.int64),
        region,
        topology,
    )
