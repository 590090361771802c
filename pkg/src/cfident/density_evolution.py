"""Density evolution of AP-leaf peeling on Poisson bipartite ensembles.

Two models share one interface:

* ``exact``: degree-0/1 UEs and degree-0 APs removed; AP degrees are Poisson
  with the thinned mean ``big_lambda_t_tilde``.
* ``approximate``: only degree-0 nodes removed, valid for large
  ``big_lambda_r``; gives the closed-form recursion used for thresholds.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np
from scipy.optimize import minimize_scalar

from .params import NetworkParams, derive_density_params, thinned_lambda_t

Variant = Literal["exact", "approximate"]

TOL = 1e-12
MAX_ITER = 100_000
ZERO_THRESHOLD = {"exact": 1e-9, "approximate": 1e-3}
DOMAIN_SLACK = 1e-12


def exact_epsilon(big_lambda_t_tilde: float) -> float:
    """Share of APs that are not leaves after preprocessing: 1 - A_1."""
    if big_lambda_t_tilde == 0:
        return 0.0
    return 1.0 - big_lambda_t_tilde / math.expm1(big_lambda_t_tilde)


def approximate_epsilon(big_lambda_t: float) -> float:
    if big_lambda_t == 0:
        return 0.0
    return -(math.expm1(-big_lambda_t) + big_lambda_t * math.exp(-big_lambda_t)) / -math.expm1(
        -big_lambda_t
    )


@dataclass(frozen=True)
class DEModel:
    variant: Variant
    big_lambda_t: float
    big_lambda_r: float
    big_lambda_t_tilde: float
    epsilon_delta: float

    @classmethod
    def exact(cls, big_lambda_t: float, big_lambda_r: float) -> DEModel:
        tilde = thinned_lambda_t(big_lambda_t, big_lambda_r)
        return cls("exact", big_lambda_t, big_lambda_r, tilde, exact_epsilon(tilde))

    @classmethod
    def approximate(cls, big_lambda_t: float, big_lambda_r: float) -> DEModel:
        return cls(
            "approximate", big_lambda_t, big_lambda_r, big_lambda_t, approximate_epsilon(big_lambda_t)
        )

    @classmethod
    def from_params(cls, params: NetworkParams, group_index: int = 0, variant: Variant = "exact"):
        dp = derive_density_params(params, group_index)
        if variant == "exact":
            return cls.exact(dp.big_lambda_t, dp.big_lambda_r)
        return cls.approximate(dp.big_lambda_t, dp.big_lambda_r)

    @property
    def ap_mean_degree(self) -> float:
        return self.big_lambda_t_tilde if self.variant == "exact" else self.big_lambda_t


def _check_unit(x, name="x"):
    if np.any(np.asarray(x) < -DOMAIN_SLACK) or np.any(np.asarray(x) > 1 + DOMAIN_SLACK):
        raise ValueError(f"{name} must lie in [0, 1]")
    return np.clip(x, 0.0, 1.0)


def beta_edge(x, model: DEModel):
    """UE degree distribution from the edge perspective."""
    x = _check_unit(x)
    lr = model.big_lambda_r
    if model.variant == "approximate":
        return np.exp(-lr * (1.0 - x))
    if lr == 0:
        return x
    return (np.exp(-lr * (1.0 - x)) - math.exp(-lr)) / -math.expm1(-lr)


def alpha_edge(x, model: DEModel):
    """AP degree distribution from the edge perspective."""
    x = _check_unit(x)
    return np.exp(-model.ap_mean_degree * (1.0 - x))


def de_step(z, model: DEModel):
    """One density-evolution update z -> eps * beta(1 - alpha(1 - z))."""
    eps = model.epsilon_delta
    z = np.asarray(z, float)
    if np.any(z < -DOMAIN_SLACK) or np.any(z > eps + DOMAIN_SLACK):
        raise ValueError(f"z must lie in [0, {eps}]")
    z = np.clip(z, 0.0, eps)
    lr = model.big_lambda_r
    w = np.exp(-model.ap_mean_degree * z)
    if model.variant == "approximate":
        out = eps * np.exp(-lr * w)
    elif lr == 0:
        out = eps * (1.0 - w)
    else:
        # e^{-lr w} - e^{-lr} = e^{-lr w} (1 - e^{-lr (1 - w)}), accurate for small z
        u = -np.expm1(-model.ap_mean_degree * z)
        out = eps * np.exp(-lr * w) * -np.expm1(-lr * u) / -math.expm1(-lr)
    return float(out) if out.ndim == 0 else out


def de_slope(z, model: DEModel):
    """d(de_step)/dz."""
    z = np.asarray(z, float)
    lt, lr = model.ap_mean_degree, model.big_lambda_r
    w = np.exp(-lt * z)
    if model.variant == "approximate":
        out = model.epsilon_delta * np.exp(-lr * w) * lr * lt * w
    elif lr == 0:
        out = model.epsilon_delta * lt * w
    else:
        out = model.epsilon_delta * np.exp(-lr * w) * lr * lt * w / -math.expm1(-lr)
    return float(out) if out.ndim == 0 else out


@dataclass
class DensityEvolutionTrace:
    iterates: list[float]
    verdict: Literal["identifiable", "unidentifiable", "undetermined"]
    iterations_used: int
    model: DEModel = field(repr=False)

    @property
    def converged_value(self) -> float:
        return self.iterates[-1]


def iterate(
    model: DEModel,
    tol: float = TOL,
    max_iter: int = MAX_ITER,
    zero_threshold: float | None = None,
) -> DensityEvolutionTrace:
    """Run the recursion from z = eps until successive iterates differ by < tol."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    if zero_threshold is None:
        zero_threshold = ZERO_THRESHOLD[model.variant]
    z = model.epsilon_delta
    zs = [z]
    converged = z == 0.0
    while not converged and len(zs) <= max_iter:
        nz = de_step(z, model)
        zs.append(nz)
        converged = abs(z - nz) < tol or nz == 0.0
        z = nz
    if z < zero_threshold:
        verdict = "identifiable"
    elif converged:
        verdict = "unidentifiable"
    else:
        verdict = "undetermined"
    return DensityEvolutionTrace(zs, verdict, len(zs) - 1, model)


def classify(model: DEModel, grid_points: int = 10_000) -> Literal["identifiable", "unidentifiable"]:
    """Grid test of ``de_step(z) < z`` on the relevant interval.

    Exact model: over (0, eps], plus the slope condition at z = 0.
    Approximate model: over [1e-3, eps] (its recursion never reaches 0).
    Near-tangent margins are refined by a bounded minimisation.
    """
    if grid_points < 1000:
        raise ValueError("grid_points must be at least 1000")
    eps = model.epsilon_delta
    if model.variant == "exact":
        lo = 0.0
        if eps == 0.0:
            return "identifiable"
        if de_slope(0.0, model) >= 1.0:
            return "unidentifiable"
        zs = np.linspace(lo, eps, grid_points + 1)[1:]
    else:
        lo = ZERO_THRESHOLD["approximate"]
        if eps <= lo:
            return "identifiable"
        zs = np.linspace(lo, eps, grid_points + 1)
    margin = zs - de_step(zs, model)
    if np.any(margin <= 0):
        return "unidentifiable"
    h = zs[1] - zs[0]
    i = int(np.argmin(margin))
    if margin[i] < 10 * h:
        a, b = zs[max(i - 1, 0)], zs[min(i + 1, len(zs) - 1)]
        if model.variant == "exact":
            a = max(a, h * 1e-3)
        res = minimize_scalar(
            lambda z: z - de_step(z, model), bounds=(a, b), method="bounded",
            options={"xatol": 1e-14 * max(1.0, b)},
        )
        if res.fun <= 0:
            return "unidentifiable"
    return "identifiable"


def write_trace_csv(trace: DensityEvolutionTrace, path) -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", "z"])
        for i, z in enumerate(trace.iterates, start=1):
            w.writerow([i, f"{z:.12g}"])
