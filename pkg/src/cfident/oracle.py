"""Jacobian-rank check of local identifiability for tiny noise-free instances.

The model is Y = H X with H supported on the graph's edges, one unit pilot
column shared by all UEs (single pilot group) followed by ``t_d`` unknown
data columns. Values are real; generic rank is the same as for complex data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import BipartiteGraph

MAX_UE = 8
MAX_AP = 16
TOL_RANK = 1e-8


@dataclass(frozen=True, eq=False)
class BilinearInstance:
    n_ap: int
    n_ue: int
    edges: tuple[np.ndarray, np.ndarray]  # (ap, ue), alive edges only
    h: np.ndarray  # (n_ap, n_ue), zero off the edge set
    x_pilot: np.ndarray  # (n_ue, 1)
    x_data: np.ndarray  # (n_ue, t_d)

    @property
    def x(self) -> np.ndarray:
        return np.hstack([self.x_pilot, self.x_data])

    @property
    def y(self) -> np.ndarray:
        return self.h @ self.x

    @property
    def t_d(self) -> int:
        return self.x_data.shape[1]


@dataclass(frozen=True)
class RankReport:
    full_rank: bool
    rank: int
    n_unknowns: int
    defect: int
    singular_values: np.ndarray


def build_instance(graph: BipartiteGraph, t_d: int, rng, *, check_headroom: bool = True):
    """Generic channel and data draw on the alive part of ``graph``."""
    sub, _, _ = graph.alive_subgraph()
    if sub.n_ue > MAX_UE or sub.n_ap > MAX_AP:
        raise ValueError(f"instance too large: {sub.n_ue} UEs / {sub.n_ap} APs")
    if check_headroom and t_d < sub.n_ue + 2:
        raise ValueError(f"t_d={t_d} below K + 2 = {sub.n_ue + 2}")
    rng = np.random.default_rng(rng)
    a, u = sub.edges()
    h = np.zeros((sub.n_ap, sub.n_ue))
    h[a, u] = rng.standard_normal(len(a))
    xd = rng.standard_normal((sub.n_ue, t_d))
    return BilinearInstance(sub.n_ap, sub.n_ue, (a, u), h, np.ones((sub.n_ue, 1)), xd)


def jacobian(inst: BilinearInstance) -> np.ndarray:
    """d vec(Y) / d (edge channels, data), rows ordered (ap, time)."""
    a, u = inst.edges
    x = inst.x
    t = x.shape[1]
    n_edge = len(a)
    jac = np.zeros((inst.n_ap * t, n_edge + inst.n_ue * inst.t_d))
    for e, (l, k) in enumerate(zip(a, u)):
        jac[l * t : (l + 1) * t, e] = x[k]
        for s in range(inst.t_d):
            jac[l * t + 1 + s, n_edge + k * inst.t_d + s] = inst.h[l, k]
    return jac


def local_identifiability(inst: BilinearInstance, tol_rank: float = TOL_RANK) -> RankReport:
    if inst.n_ue == 0 or len(inst.edges[0]) == 0:
        raise ValueError("degenerate instance: empty graph")
    jac = jacobian(inst)
    sv = np.linalg.svd(jac, compute_uv=False)
    if sv[0] == 0:
        raise ValueError("degenerate instance: zero Jacobian")
    rank = int(np.sum(sv > tol_rank * sv[0]))
    n = jac.shape[1]
    return RankReport(rank == n, rank, n, n - rank, sv)
