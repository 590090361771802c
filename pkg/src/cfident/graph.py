"""AP/UE bipartite graphs: construction, preprocessing and degree statistics."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

from .deployment import Deployment, NodeCounts, neighbors_within, sample_node_counts
from .params import NetworkParams


def _csr(n_rows: int, n_cols: int, rows: np.ndarray, cols: np.ndarray):
    key = rows * n_cols + cols
    if np.any(key[1:] < key[:-1]):
        order = np.argsort(key)
        key, cols = key[order], cols[order]
    if np.any(key[1:] == key[:-1]):
        raise ValueError("duplicate edge")
    indptr = np.zeros(n_rows + 1, np.int64)
    np.cumsum(np.bincount(rows, minlength=n_rows), out=indptr[1:])
    return indptr, cols.astype(np.int64)


class BipartiteGraph:
    """Sparse AP/UE graph with alive flags and live degree counters.

    Adjacency is stored twice in CSR form (per AP and per UE) and never
    changes; removals only flip ``*_alive`` and decrement ``*_deg``. Dead
    nodes have degree zero.
    """

    def __init__(self, n_ap: int, n_ue: int, ap_idx=(), ue_idx=()):
        ap_idx = np.asarray(ap_idx, np.int64).ravel()
        ue_idx = np.asarray(ue_idx, np.int64).ravel()
        if ap_idx.shape != ue_idx.shape:
            raise ValueError("edge endpoint arrays differ in length")
        if len(ap_idx) and (
            ap_idx.min() < 0 or ap_idx.max() >= n_ap or ue_idx.min() < 0 or ue_idx.max() >= n_ue
        ):
            raise ValueError("edge endpoint out of range")
        self.n_ap = int(n_ap)
        self.n_ue = int(n_ue)
        self.ap_indptr, self.ap_indices = _csr(self.n_ap, self.n_ue, ap_idx, ue_idx)
        self.ue_indptr, self.ue_indices = _csr(self.n_ue, self.n_ap, ue_idx, ap_idx)
        self.ap_deg = np.diff(self.ap_indptr)
        self.ue_deg = np.diff(self.ue_indptr)
        self.ap_alive = np.ones(self.n_ap, bool)
        self.ue_alive = np.ones(self.n_ue, bool)
        self.preprocessed = False

    @property
    def n_edges(self) -> int:
        return len(self.ap_indices)

    def ap_neighbors(self, l: int) -> np.ndarray:
        return self.ap_indices[self.ap_indptr[l] : self.ap_indptr[l + 1]]

    def ue_neighbors(self, k: int) -> np.ndarray:
        return self.ue_indices[self.ue_indptr[k] : self.ue_indptr[k + 1]]

    def copy(self) -> BipartiteGraph:
        g = object.__new__(BipartiteGraph)
        g.__dict__.update(self.__dict__)
        for name in ("ap_deg", "ue_deg", "ap_alive", "ue_alive"):
            setattr(g, name, getattr(self, name).copy())
        return g

    def edges(self, alive_only: bool = True) -> tuple[np.ndarray, np.ndarray]:
        """(ap, ue) edge arrays sorted by AP then UE."""
        ap = np.repeat(np.arange(self.n_ap), np.diff(self.ap_indptr))
        ue = self.ap_indices
        if alive_only:
            keep = self.ap_alive[ap] & self.ue_alive[ue]
            ap, ue = ap[keep], ue[keep]
        return ap, ue

    def remove_ue(self, k: int) -> None:
        nbrs = self.ue_neighbors(k)
        nbrs = nbrs[self.ap_alive[nbrs]]
        self.ap_deg[nbrs] -= 1
        self.ue_alive[k] = False
        self.ue_deg[k] = 0

    def check(self) -> None:
        """Assert adjacency symmetry and degree-counter consistency."""
        a1, u1 = self.edges(alive_only=False)
        ue_of = np.repeat(np.arange(self.n_ue), np.diff(self.ue_indptr))
        o = np.lexsort((ue_of, self.ue_indices))
        assert np.array_equal(a1, self.ue_indices[o]) and np.array_equal(u1, ue_of[o])
        a, u = self.edges(alive_only=True)
        assert np.array_equal(self.ap_deg, np.bincount(a, minlength=self.n_ap))
        assert np.array_equal(self.ue_deg, np.bincount(u, minlength=self.n_ue))
        assert not np.any(self.ap_deg[~self.ap_alive]) and not np.any(self.ue_deg[~self.ue_alive])

    def alive_subgraph(self) -> tuple[BipartiteGraph, np.ndarray, np.ndarray]:
        """Relabelled graph over alive nodes plus the original AP and UE ids."""
        ap_ids = np.flatnonzero(self.ap_alive)
        ue_ids = np.flatnonzero(self.ue_alive)
        ap_map = np.full(self.n_ap, -1)
        ue_map = np.full(self.n_ue, -1)
        ap_map[ap_ids] = np.arange(len(ap_ids))
        ue_map[ue_ids] = np.arange(len(ue_ids))
        a, u = self.edges(alive_only=True)
        return BipartiteGraph(len(ap_ids), len(ue_ids), ap_map[a], ue_map[u]), ap_ids, ue_ids


def from_geometric(deployment: Deployment, gamma: float, group_index: int = 0) -> BipartiteGraph:
    """Disc-rule graph between all APs and the UEs of one pilot group (0-based)."""
    members = deployment.group(group_index + 1)
    a, u = neighbors_within(deployment, gamma, ue_subset=members)
    return BipartiteGraph(deployment.n_ap, len(members), a, u)


def edge_probability(params: NetworkParams) -> float:
    return min(1.0, params.disc_area / params.d**2)


def _bernoulli_positions(n: int, p: float, rng: np.random.Generator) -> np.ndarray:
    """Sorted indices in ``range(n)`` kept independently with probability ``p``."""
    if n == 0 or p <= 0:
        return np.empty(0, np.int64)
    if p >= 1:
        return np.arange(n, dtype=np.int64)
    chunks = []
    pos = -1
    while True:
        batch = int(n * p + 6 * math.sqrt(n * p) + 16)
        steps = np.cumsum(rng.geometric(p, size=batch)) + pos
        inside = steps[steps < n]
        chunks.append(inside)
        if len(inside) < batch:
            break
        pos = int(steps[-1])
    return np.concatenate(chunks).astype(np.int64)


def from_independent(
    params: NetworkParams,
    group_index: int,
    rng: np.random.Generator,
    *,
    counts: NodeCounts | None = None,
) -> BipartiteGraph:
    """Surrogate graph: every AP-UE pair linked independently with prob. pi*gamma^2/D^2."""
    if counts is None:
        counts = sample_node_counts(params, rng)
    n_ap, n_ue = counts.n_ap, counts.n_ue[group_index]
    p = params.disc_area / params.d**2
    if p > 1:
        warnings.warn(f"edge probability {p:.3g} clamped to 1", RuntimeWarning, stacklevel=2)
    pos = _bernoulli_positions(n_ap * n_ue, edge_probability(params), rng)
    return BipartiteGraph(n_ap, n_ue, pos // max(n_ue, 1), pos % max(n_ue, 1))


@dataclass(frozen=True)
class PreprocessReport:
    ue_deg0: int
    ue_deg1: int
    ap_deg0: int

    @property
    def total(self) -> int:
        return self.ue_deg0 + self.ue_deg1 + self.ap_deg0


def preprocess(graph: BipartiteGraph) -> PreprocessReport:
    """Drop isolated UEs, degree-one UEs and then isolated APs, in place.

    Only UEs are removed before the AP sweep, so UE degrees are stable and a
    single pass suffices.
    """
    alive = graph.ue_alive
    deg0 = np.flatnonzero(alive & (graph.ue_deg == 0))
    deg1 = np.flatnonzero(alive & (graph.ue_deg == 1))
    graph.ue_alive[deg0] = False
    for k in deg1:
        graph.remove_ue(k)
    ap0 = np.flatnonzero(graph.ap_alive & (graph.ap_deg == 0))
    graph.ap_alive[ap0] = False
    graph.preprocessed = True
    return PreprocessReport(len(deg0), len(deg1), len(ap0))


@dataclass(frozen=True)
class DegreeHistogram:
    counts: np.ndarray
    total: int

    @property
    def pmf(self) -> np.ndarray:
        return self.counts / self.total if self.total else self.counts.astype(float)

    @property
    def mean(self) -> float:
        if not self.total:
            return 0.0
        return float(np.dot(np.arange(len(self.counts)), self.counts) / self.total)


def degree_histogram(graph: BipartiteGraph, side: Literal["ap", "ue"]) -> DegreeHistogram:
    if side == "ap":
        deg, alive = graph.ap_deg, graph.ap_alive
    elif side == "ue":
        deg, alive = graph.ue_deg, graph.ue_alive
    else:
        raise ValueError(f"side must be 'ap' or 'ue', not {side!r}")
    counts = np.bincount(deg[alive]) if alive.any() else np.zeros(0, np.int64)
    return DegreeHistogram(counts, int(alive.sum()))


def write_edge_list(graph: BipartiteGraph, path, alive_only: bool = True) -> None:
    a, u = graph.edges(alive_only=alive_only)
    with open(Path(path), "w") as fh:
        fh.write(f"# n_ap={graph.n_ap} n_ue={graph.n_ue} n_edges={len(a)}\n")
        for l, k in zip(a.tolist(), u.tolist()):
            fh.write(f"{l} {k}\n")


def read_edge_list(path) -> BipartiteGraph:
    with open(Path(path)) as fh:
        header = fh.readline().lstrip("#").split()
        meta = dict(item.split("=") for item in header)
        data = np.loadtxt(fh, dtype=np.int64, ndmin=2)
    if data.size == 0:
        data = np.empty((0, 2), np.int64)
    if len(data) != int(meta["n_edges"]):
        raise ValueError("edge count does not match header")
    return BipartiteGraph(int(meta["n_ap"]), int(meta["n_ue"]), data[:, 0], data[:, 1])
