"""Feasibility of a coverage requirement and critical base-station densities.

The unconstrained critical density maximises spatial throughput
``lam * CP(lam) * log2(1 + tau)``. With a requirement ``CP >= eps`` the
admissible densities are those below the root of ``CP(lam) = eps`` (coverage
falls with density whenever ``delta_h > 0``), so the constrained optimum is
``min(lam_eps, lam_dagger)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from . import analytic
from .analytic import NetworkConfig
from .errors import DomainError, ShapeError
from .pathloss import PathlossModel, dspm
from .specfun import QuadratureSpec, delta

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class CriticalDensityResult:
    """Critical densities in BS per square meter.

    ``lambda_unconstrained`` maximises throughput; ``lambda_constrained``
    maximises it subject to the coverage requirement. Both are ``None``
    when the requirement cannot be met at any density.
    """

    lambda_unconstrained: float | None
    lambda_constrained: float | None
    feasible: bool
    binding: str | None

    @property
    def fold_reduction(self) -> float | None:
        """How many times the requirement shrinks the critical density."""
        if not self.feasible:
            return None
        return self.lambda_unconstrained / self.lambda_constrained


INFEASIBLE = CriticalDensityResult(None, None, False, None)


def feasibility(model: PathlossModel, cfg: NetworkConfig) -> bool:
    """Necessary condition ``delta(tau/Na, alpha_last) < 1/eps - 1`` for ``CP >= eps``."""
    eps = cfg.cp_requirement
    if eps == 0:
        return True
    return delta(cfg.tau_dagger, model.last_exponent) < 1.0 / eps - 1.0


def _closed_form(lam_dagger, dl, eps):
    if eps == 0:
        return CriticalDensityResult(lam_dagger, lam_dagger, True, "unconstrained_peak")
    if not 1.0 / (1.0 + dl) > eps:
        return INFEASIBLE
    lam_eps = lam_dagger * math.log(1.0 / (eps * (1.0 + dl)))
    if lam_eps < lam_dagger:
        return CriticalDensityResult(lam_dagger, lam_eps, True, "cp_boundary")
    return CriticalDensityResult(lam_dagger, lam_dagger, True, "unconstrained_peak")


def critical_density_sspm(alpha0: float, cfg: NetworkConfig) -> CriticalDensityResult:
    """Closed-form critical densities for a single-slope model.

    ``lam_dagger = 1 / (pi delta(tau/Na, alpha0) delta_h**2)``, and the
    coverage root is ``lam_dagger * ln(1 / (eps (1 + delta)))``.
    """
    if not alpha0 > 2:
        raise DomainError(f"alpha0 must exceed 2, got {alpha0}")
    if cfg.delta_h <= 0:
        raise DomainError("single-slope critical density diverges at delta_h = 0")
    dl = delta(cfg.tau_dagger, alpha0)
    lam_dagger = 1.0 / (math.pi * dl * cfg.delta_h**2)
    return _closed_form(lam_dagger, dl, cfg.cp_requirement)


def critical_density_dspm(alpha0: float, alpha1: float, r1: float, cfg: NetworkConfig) -> CriticalDensityResult:
    """Approximate closed-form critical densities for a dual-slope model.

    Keeps only users served beyond the corner distance ``r1``:
    ``lam_dagger = 1 / (pi [r1**2 (1 + delta) + delta_h**2 delta])`` with
    ``delta = delta(tau/Na, alpha1)``.
    """
    dspm(alpha0, alpha1, r1)  # validates the slope parameters
    dl = delta(cfg.tau_dagger, alpha1)
    lam_dagger = 1.0 / (math.pi * (r1 * r1 * (1.0 + dl) + cfg.delta_h**2 * dl))
    return _closed_form(lam_dagger, dl, cfg.cp_requirement)


def closed_form_critical_density(model: PathlossModel, cfg: NetworkConfig) -> CriticalDensityResult | None:
    """Closed form for one- and two-slope models, ``None`` otherwise."""
    if model.n_slopes == 1:
        return critical_density_sspm(model.exponents[0], cfg)
    if model.n_slopes == 2:
        return critical_density_dspm(*model.exponents, model.breakpoints[0], cfg)
    return None


def golden_section_max(f, lo, hi, rel_tol=1e-3):
    """Maximise a unimodal ``f`` on ``[lo, hi]`` by golden-section search.

    Stops once the bracket is narrower than ``rel_tol`` (absolute, callers
    work in log-density so this is a relative tolerance on the density).
    """
    a, b = lo, hi
    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > rel_tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_PHI * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - INV_PHI * (b - a)
            f1 = f(x1)
    return 0.5 * (a + b)


def _local_maxima(values, tol):
    """Indices of interior discrete local maxima that stand above their valleys by ``tol``."""
    idx = []
    n = len(values)
    for i in range(n):
        left = values[i - 1] if i > 0 else -np.inf
        right = values[i + 1] if i < n - 1 else -np.inf
        if values[i] >= left and values[i] > right:
            idx.append(i)
    if len(idx) <= 1:
        return idx
    # discard bumps smaller than tol relative to the global maximum
    top = max(values)
    kept = []
    for k, i in enumerate(idx):
        lo_bound = idx[k - 1] if k > 0 else 0
        hi_bound = idx[k + 1] if k < len(idx) - 1 else n - 1
        valley = min(min(values[lo_bound:i + 1]), min(values[i:hi_bound + 1]))
        if values[i] - valley > tol * top or values[i] == top:
            kept.append(i)
    return kept


def critical_density_numeric(
    model: PathlossModel,
    cfg: NetworkConfig,
    use_exact: bool = False,
    spec: QuadratureSpec | None = None,
    points_per_decade: int = 7,
    peak_rel_tol: float = 0.005,
    workers: int = 1,
) -> CriticalDensityResult:
    """Critical densities for any multi-slope model by direct search.

    The throughput profile is sampled on a log-density grid spanning six
    decades around the closed-form estimate (or ``1 / (pi delta_h**2)``),
    widened while the maximum sits on an edge, then refined by
    golden-section search to ``peak_rel_tol``. The coverage root
    ``CP(lam) = eps`` is found by bisection in log-density.

    Raises:
        ShapeError: if the sampled profile has more than one local maximum,
            or no interior maximum exists within 1e-12..1e6 BS/m^2.
    """
    if cfg.delta_h <= 0:
        raise DomainError("numeric critical density needs delta_h > 0 (otherwise throughput grows without bound)")
    if not feasibility(model, cfg):
        return INFEASIBLE
    method = "miso_exact" if use_exact else "miso_approx"

    def cp(lam):
        return analytic.coverage(model, cfg.with_(lam=lam), method, spec)

    def log_st(log_lam):
        lam = math.exp(log_lam)
        return log_lam + math.log(max(cp(lam), 1e-300))

    guess = closed_form_critical_density(model, cfg.with_(cp_requirement=0.0))
    centre = guess.lambda_unconstrained if guess else 1.0 / (math.pi * cfg.delta_h**2)
    step = math.log(10.0) / points_per_decade
    lo = math.log(centre) - 3 * math.log(10.0)
    hi = math.log(centre) + 3 * math.log(10.0)
    grid = list(np.arange(lo, hi + 0.5 * step, step))
    values = _map(log_st, grid, workers)
    floor, ceil = math.log(1e-12), math.log(1e6)
    while True:
        i = int(np.argmax(values))
        if i == 0 and grid[0] > floor:
            new = [grid[0] - step * k for k in range(points_per_decade, 0, -1)]
            grid = new + grid
            values = _map(log_st, new, workers) + values
        elif i == len(grid) - 1 and grid[-1] < ceil:
            new = [grid[-1] + step * k for k in range(1, points_per_decade + 1)]
            grid = grid + new
            values = values + _map(log_st, new, workers)
        else:
            break
    i = int(np.argmax(values))
    if i in (0, len(grid) - 1):
        raise ShapeError("throughput has no interior maximum", np.exp(grid), np.exp(values))
    st_vals = np.exp(values)
    peaks = _local_maxima(list(st_vals), peak_rel_tol)
    if len(peaks) > 1:
        raise ShapeError(
            f"throughput profile has {len(peaks)} local maxima", np.exp(grid), st_vals
        )
    log_peak = golden_section_max(log_st, grid[i - 1], grid[i + 1], rel_tol=math.log1p(peak_rel_tol))
    lam_dagger = math.exp(log_peak)

    eps = cfg.cp_requirement
    if eps == 0 or cp(lam_dagger) >= eps:
        return CriticalDensityResult(lam_dagger, lam_dagger, True, "unconstrained_peak")

    # walk down until coverage meets the requirement
    log_lo = log_peak
    while True:
        log_lo -= math.log(10.0)
        if log_lo < floor:
            return INFEASIBLE
        if cp(math.exp(log_lo)) >= eps:
            break
    root = bisect(lambda x: cp(math.exp(x)) - eps, log_lo, log_peak, xtol=1e-9, rtol=1e-12)
    lam_eps = math.exp(root)
    # bisection brackets the root; step to the admissible side
    if cp(lam_eps) < eps:
        lam_eps = math.exp(root - 1e-9)
    return CriticalDensityResult(lam_dagger, lam_eps, True, "cp_boundary")


def _map(fn, xs, workers):
    if workers <= 1:
        return [fn(x) for x in xs]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, xs))


def throughput_peak(model: PathlossModel, cfg: NetworkConfig, method: str, spec=None, lo=1e-7, hi=1e2, points_per_decade=5):
    """``(lam, st)`` at the throughput maximum of an analytic method.

    Grid search over ``[lo, hi]`` followed by golden-section refinement; no
    coverage requirement is applied.
    """
    def log_st(log_lam):
        lam = math.exp(log_lam)
        return log_lam + math.log(max(analytic.coverage(model, cfg.with_(lam=lam), method, spec), 1e-300))

    decades = math.log10(hi / lo)
    grid = np.linspace(math.log(lo), math.log(hi), int(round(decades * points_per_decade)) + 1)
    values = [log_st(g) for g in grid]
    i = int(np.argmax(values))
    if i in (0, len(grid) - 1):
        raise ShapeError("throughput maximum lies on the search boundary", np.exp(grid), np.exp(values))
    x = golden_section_max(log_st, grid[i - 1], grid[i + 1], rel_tol=1e-4)
    return math.exp(x), math.exp(log_st(x))


__all__ = [
    "CriticalDensityResult",
    "feasibility",
    "critical_density_sspm",
    "critical_density_dspm",
    "critical_density_numeric",
    "closed_form_critical_density",
    "golden_section_max",
    "throughput_peak",
]
