"""First phase of Karp-Sipser restricted to AP leaves."""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

from .graph import BipartiteGraph

Order = Literal["fifo", "lifo", "random"]

# work bound: pops + adjacency entries scanned <= OPS_FACTOR * (V + E)
OPS_FACTOR = 4


class NotPreprocessedError(ValueError):
    pass


@dataclass
class PeelingResult:
    identified_ue_order: list[int]
    core_ue_count: int
    core_ap_count: int
    initial_ue_count: int
    core_ue: np.ndarray = field(repr=False)
    core_ap: np.ndarray = field(repr=False)
    operations: int = 0
    trace: list[tuple[int, int, int, int]] | None = field(default=None, repr=False)

    @property
    def identified_ue_count(self) -> int:
        return len(self.identified_ue_order)

    @property
    def verdict(self) -> bool:
        return self.core_ue_count == 0

    @property
    def r_id_ue(self) -> float:
        if self.initial_ue_count == 0:
            return 1.0
        return self.identified_ue_count / self.initial_ue_count


def core_is_empty(result: PeelingResult) -> bool:
    return result.verdict


def peel(
    graph: BipartiteGraph,
    *,
    order: Order = "fifo",
    rng: np.random.Generator | None = None,
    inplace: bool = False,
    record_trace: bool = False,
    check: bool = False,
) -> PeelingResult:
    """Repeatedly take a degree-one AP, identify its UE and delete that UE.

    Stale worklist entries are skipped when popped. APs whose degree falls to
    zero are marked satisfied (dead). ``order`` selects the worklist
    discipline; the resulting core does not depend on it.
    """
    if not graph.preprocessed:
        raise NotPreprocessedError("peel requires a preprocessed graph")
    g = graph if inplace else graph.copy()
    if order == "random" and rng is None:
        raise ValueError("order='random' needs an rng")
    initial = int(g.ue_alive.sum())
    ap_deg, ap_alive, ue_alive = g.ap_deg, g.ap_alive, g.ue_alive
    ue_indptr, ue_indices = g.ue_indptr, g.ue_indices
    ap_indptr, ap_indices = g.ap_indptr, g.ap_indices

    leaves = np.flatnonzero(ap_alive & (ap_deg == 1)).tolist()
    if order == "fifo":
        work = deque(leaves)
        pop = work.popleft
    else:
        work = leaves
        if order == "lifo":
            pop = work.pop
        else:
            def pop():
                i = int(rng.integers(len(work)))
                work[i], work[-1] = work[-1], work[i]
                return work.pop()

    identified = []
    trace = [] if record_trace else None
    ops = 0
    remaining = initial
    while work:
        l = pop()
        ops += 1
        if ap_deg[l] != 1:
            continue
        cand = ap_indices[ap_indptr[l] : ap_indptr[l + 1]]
        ops += len(cand)
        k = int(cand[ue_alive[cand]][0])
        nbrs = ue_indices[ue_indptr[k] : ue_indptr[k + 1]]
        ops += len(nbrs)
        if check:
            before = ap_deg.copy()
        ap_deg[nbrs] -= 1
        ue_alive[k] = False
        g.ue_deg[k] = 0
        d = ap_deg[nbrs]
        ap_alive[nbrs[d == 0]] = False
        new_leaves = nbrs[d == 1]
        if len(new_leaves):
            work.extend(new_leaves.tolist())
        identified.append(k)
        remaining -= 1
        if trace is not None:
            trace.append((len(identified), int(l), k, remaining))
        if check:
            assert np.all(ap_deg <= before)
            g.check()

    n_nodes = g.n_ap + g.n_ue
    assert ops <= OPS_FACTOR * (n_nodes + g.n_edges) + OPS_FACTOR, "peeling exceeded linear work bound"
    core_ue = np.flatnonzero(ue_alive)
    core_ap = np.flatnonzero(ap_alive & (ap_deg >= 1))
    return PeelingResult(
        identified_ue_order=identified,
        core_ue_count=len(core_ue),
        core_ap_count=len(core_ap),
        initial_ue_count=initial,
        core_ue=core_ue,
        core_ap=core_ap,
        operations=ops,
        trace=trace,
    )


def write_trace_csv(result: PeelingResult, path) -> None:
    if result.trace is None:
        raise ValueError("result has no trace; peel with record_trace=True")
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "ap_removed", "ue_removed", "remaining_ue"])
        w.writerows(result.trace)
