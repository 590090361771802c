"""Critical AP density via the Lambert W function, region curves and pilot sizing."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from pathlib import Path

from .density_evolution import DEModel, approximate_epsilon, de_slope, de_step

INV_E = math.exp(-1.0)
BRANCH_SLACK = 1e-12
TANGENCY_TOL = 1e-9
DEFAULT_RADII = (30.0, 50.0, 70.0, 100.0)


def lambert_w0(x: float) -> float:
    """Principal branch W0 of the Lambert W function for real ``x >= -1/e``.

    Halley iteration started from the branch-point series for x near -1/e,
    from log1p(x) on the middle range and from the asymptotic
    log(x) - log(log(x)) for large x.
    """
    x = float(x)
    if math.isnan(x):
        return math.nan
    if x < -INV_E:
        if x < -INV_E - BRANCH_SLACK:
            raise ValueError(f"lambert_w0 undefined for x={x!r} < -1/e")
        return -1.0
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return math.inf
    q = x + INV_E
    if q < 0.3:
        p = math.sqrt(2.0 * math.e * q)
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p**3 - 43.0 / 540.0 * p**4
        if p < 1e-4:
            return w
    elif x < 3.0:
        w = math.log1p(x)
    else:
        lx = math.log(x)
        w = lx - math.log(lx)
    for _ in range(100):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w -= step
        if abs(step) <= 4e-16 * (1.0 + abs(w)):
            break
    return w


@dataclass(frozen=True)
class ThresholdResult:
    big_lambda_t: float
    exists: bool
    epsilon_delta_hat: float
    big_lambda_r_crit: float = math.nan
    z_crit: float = math.nan
    lambda_r_crit: float = math.nan
    gamma: float = math.nan
    fixed_point_residual: float = math.nan
    slope_residual: float = math.nan


def critical_lambda_r(big_lambda_t: float, gamma: float | None = None) -> ThresholdResult:
    """Smallest mean AP degree for which the approximate recursion is driven to ~0.

    Solves the tangency of the recursion with the bisector in closed form;
    ``exists`` is False when ``big_lambda_t * eps_hat < e``.
    """
    if not big_lambda_t > 0:
        raise ValueError("big_lambda_t must be positive")
    eps = approximate_epsilon(big_lambda_t)
    g = math.nan if gamma is None else float(gamma)
    prod = big_lambda_t * eps
    if prod < math.e * (1.0 - BRANCH_SLACK):
        return ThresholdResult(big_lambda_t, False, eps, gamma=g)
    w = lambert_w0(max(-1.0 / prod, -INV_E))
    z = eps * math.exp(w)
    big_r = -w * math.exp(big_lambda_t * z)
    model = DEModel.approximate(big_lambda_t, big_r)
    fp_res = abs(de_step(z, model) - z)
    sl_res = abs(de_slope(z, model) - 1.0)
    lam_r = big_r / (math.pi * g * g) if gamma is not None else math.nan
    return ThresholdResult(big_lambda_t, True, eps, big_r, z, lam_r, g, fp_res, sl_res)


def _existence_bracket(tol: float = 1e-9) -> tuple[float, float]:
    lo, hi = 1.0, 10.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid * approximate_epsilon(mid) >= math.e:
            hi = mid
        else:
            lo = mid
    return lo, hi


def existence_boundary(tol: float = 1e-9) -> float:
    """Mean UE degree below which no tangency (and no sharp threshold) exists."""
    lo, hi = _existence_bracket(tol)
    return 0.5 * (lo + hi)


def critical_lambda_t(big_lambda_r: float, rtol: float = 1e-8) -> float | None:
    """Largest mean UE degree whose critical AP degree does not exceed ``big_lambda_r``.

    Returns None when ``big_lambda_r`` lies below the critical AP degree at
    the existence boundary (the infimum, equal to e).
    """
    if not big_lambda_r > 0:
        raise ValueError("big_lambda_r must be positive")
    lo = _existence_bracket()[1]
    r_lo = critical_lambda_r(lo).big_lambda_r_crit
    if big_lambda_r < r_lo:
        return None
    hi = 2.0 * lo
    r_hi = critical_lambda_r(hi).big_lambda_r_crit
    while r_hi <= big_lambda_r:
        if r_hi < r_lo:
            raise ArithmeticError("critical AP degree not monotone in UE degree")
        lo, r_lo = hi, r_hi
        hi *= 2.0
        r_hi = critical_lambda_r(hi).big_lambda_r_crit
        if math.isinf(r_hi) or hi > 1e6:
            break
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        r_mid = critical_lambda_r(mid).big_lambda_r_crit
        if not r_lo <= r_mid <= r_hi:
            raise ArithmeticError("critical AP degree not monotone in UE degree")
        if r_mid <= big_lambda_r:
            lo, r_lo = mid, r_mid
        else:
            hi, r_hi = mid, r_mid
    return lo


@dataclass(frozen=True)
class RegionPoint:
    gamma: float
    lambda_t: float
    Lambda_t: float
    exists: bool
    Lambda_r_crit: float
    lambda_r_crit: float
    z_crit: float
    epsilon_delta_hat: float


REGION_COLUMNS = [
    "gamma", "lambda_t", "Lambda_t", "exists", "Lambda_r_crit", "lambda_r_crit", "z_crit",
    "epsilon_delta_hat",
]


def region_curve(gamma: float, lambda_t_grid) -> list[RegionPoint]:
    area = math.pi * gamma * gamma
    rows = []
    for lam in lambda_t_grid:
        lam = float(lam)
        big_t = lam * area
        if big_t <= 0:
            rows.append(RegionPoint(gamma, lam, big_t, False, math.nan, math.nan, math.nan, 0.0))
            continue
        r = critical_lambda_r(big_t, gamma)
        rows.append(
            RegionPoint(
                gamma, lam, big_t, r.exists, r.big_lambda_r_crit, r.lambda_r_crit, r.z_crit,
                r.epsilon_delta_hat,
            )
        )
    return rows


def format_float(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def write_region_csv(rows: list[RegionPoint], path_or_file) -> None:
    own = isinstance(path_or_file, (str, Path))
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh)
        w.writerow(REGION_COLUMNS)
        for row in rows:
            d = asdict(row)
            w.writerow([format_float(d[c]) for c in REGION_COLUMNS])
    finally:
        if own:
            fh.close()


@dataclass(frozen=True)
class PilotResult:
    exists: bool
    t_p: int | None
    lambda_t_crit: float


def min_pilots(lambda_t_total: float, lambda_r: float, gamma: float) -> PilotResult:
    """Fewest equally loaded pilot groups keeping every group below the critical UE density."""
    if not (lambda_t_total > 0 and lambda_r > 0 and gamma > 0):
        raise ValueError("inputs must be positive")
    area = math.pi * gamma * gamma
    big_t_crit = critical_lambda_t(lambda_r * area)
    if big_t_crit is None:
        return PilotResult(False, None, math.nan)
    lam_crit = big_t_crit / area
    t_p = max(1, math.floor(lambda_t_total / lam_crit) + 1)
    while lambda_t_total / t_p >= lam_crit:
        t_p += 1
    while t_p > 1 and lambda_t_total / (t_p - 1) < lam_crit:
        t_p -= 1
    return PilotResult(True, t_p, lam_crit)
