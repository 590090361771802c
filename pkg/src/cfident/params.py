"""Network parameters, derived mean degrees and per-trial seeding."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MAX_EXPECTED_NODES = 10**7

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class NetworkParams:
    """Physical intensities of a PPP network.

    Intensities are per unit area (1/m^2), lengths in metres. ``lambda_t_groups``
    holds one UE intensity per pilot group.
    """

    lambda_t_groups: tuple[float, ...]
    lambda_r: float
    gamma: float
    d: float = 1000.0
    t_p: int = 1
    t_d: int = 10

    def __post_init__(self):
        groups = tuple(float(v) for v in np.atleast_1d(self.lambda_t_groups))
        object.__setattr__(self, "lambda_t_groups", groups)
        _check_hard(self)

    @classmethod
    def single_group(cls, lambda_t: float, lambda_r: float, gamma: float, **kw) -> NetworkParams:
        return cls((lambda_t,), lambda_r, gamma, **kw)

    @property
    def n_groups(self) -> int:
        return len(self.lambda_t_groups)

    @property
    def lambda_t_total(self) -> float:
        return math.fsum(self.lambda_t_groups)

    @property
    def disc_area(self) -> float:
        return math.pi * self.gamma**2

    @property
    def expected_nodes(self) -> float:
        return (self.lambda_r + self.lambda_t_total) * self.d**2


@dataclass(frozen=True)
class DensityParams:
    big_lambda_t: float
    big_lambda_r: float
    big_lambda_t_tilde: float


def _check_hard(params: NetworkParams) -> None:
    vals = (*params.lambda_t_groups, params.lambda_r)
    if any(not math.isfinite(v) or v < 0 for v in vals):
        raise ValueError(f"intensities must be finite and non-negative, got {vals}")
    if not params.gamma > 0 or not math.isfinite(params.gamma):
        raise ValueError(f"gamma must be positive, got {params.gamma}")
    if not params.d > 0 or not math.isfinite(params.d):
        raise ValueError(f"d must be positive, got {params.d}")
    if int(params.t_p) != params.t_p or params.t_p < 1:
        raise ValueError(f"t_p must be a positive integer, got {params.t_p}")
    if params.t_d < 0:
        raise ValueError(f"t_d must be non-negative, got {params.t_d}")
    if params.n_groups > params.t_p:
        raise ValueError(f"{params.n_groups} pilot groups but only t_p={params.t_p} pilots")


def validate(params: NetworkParams, max_nodes: float = MAX_EXPECTED_NODES) -> list[str]:
    """Return soft warnings for ``params``; raise ``ValueError`` on domain violations."""
    _check_hard(params)
    warnings = []
    if params.gamma > params.d / 10:
        warnings.append(f"gamma not << D (gamma={params.gamma:g}, D={params.d:g})")
    if params.lambda_r == 0:
        warnings.append("lambda_r is zero")
    for p, lam in enumerate(params.lambda_t_groups):
        if lam == 0:
            warnings.append(f"lambda_t of group {p} is zero")
    if params.expected_nodes > max_nodes:
        warnings.append(
            f"expected node count {params.expected_nodes:.3g} exceeds budget {max_nodes:.3g}"
        )
    return warnings


def thinned_lambda_t(big_lambda_t: float, big_lambda_r: float) -> float:
    """AP-side mean degree after degree-one UEs are dropped."""
    return big_lambda_t * (1.0 - big_lambda_r * math.exp(-big_lambda_r))


def derive_density_params(params: NetworkParams, group_index: int = 0) -> DensityParams:
    if not 0 <= group_index < params.n_groups:
        raise IndexError(f"group_index {group_index} out of range for {params.n_groups} groups")
    big_t = params.lambda_t_groups[group_index] * params.disc_area
    big_r = params.lambda_r * params.disc_area
    tilde = thinned_lambda_t(big_t, big_r)
    assert all(math.isfinite(v) for v in (big_t, big_r, tilde))
    return DensityParams(big_t, big_r, tilde)


# Seeding: trial i of a campaign with master seed m uses
#   seed_i = splitmix64(m XOR splitmix64(i))
# The mixed value is fed to numpy's SeedSequence, which spawns independent
# streams (node counts, layout).


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int = 0

    def __post_init__(self):
        if not 0 <= self.master_seed <= _MASK64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")

    def trial_seed(self, trial: int) -> int:
        return splitmix64(self.master_seed ^ splitmix64(trial & _MASK64))

    def trial_streams(self, trial: int) -> tuple[np.random.Generator, np.random.Generator]:
        """(counts_rng, layout_rng) for one trial."""
        children = np.random.SeedSequence(self.trial_seed(trial)).spawn(2)
        counts, layout = (np.random.default_rng(c) for c in children)
        return counts, layout
