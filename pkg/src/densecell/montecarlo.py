"""Monte Carlo estimation of coverage over a Poisson network of base stations.

Each trial drops base stations in a disc of radius ``R`` around the typical
user, serves the user from the nearest one and compares the SIR with the
threshold. The network is sampled radially: with ``Gamma_k`` the partial sums
of unit exponentials, ``r_k = sqrt(Gamma_k / (pi lam))`` are the ordered
ground distances of a PPP of intensity ``lam``. Keeping the points with
``Gamma_k <= pi lam R**2`` is the same law as a Poisson count of uniform
points in the disc, the serving BS is always index 0, and enlarging the
window only appends points, so runs that differ only in ``R`` are paired.

Randomness for trial ``i`` comes from ``SeedSequence(seed, spawn_key=(i,))``
so estimates do not depend on how trials are split across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .analytic import CpStPoint, NetworkConfig, cp_miso_exact, st_from_cp
from .errors import ConstructionError
from .pathloss import PathlossModel, gain

FADING_KINDS = ("rayleigh", "beamforming", "rice")
WILSON_Z = 1.959963984540054  # two-sided 95% normal quantile
BLOCK = 512  # draws per refill; keeps geometry and fading aligned by BS index
CHUNK = 1000  # trials per work item


@dataclass(frozen=True)
class FadingSpec:
    """Small-scale fading of the power gains.

    ``rayleigh`` gives every link a ``chi2(2)`` gain. ``beamforming`` gives
    the serving link ``chi2(2 Na)`` and interferers ``chi2(2)``. ``rice``
    draws every link from a noncentral chi-square with ``rice_dof`` degrees
    of freedom and noncentrality ``rice_noncentrality``, without
    normalisation (mean ``dof + nc``).
    """

    kind: str = "beamforming"
    rice_noncentrality: float = 1.0
    rice_dof: int = 12

    def __post_init__(self):
        if self.kind not in FADING_KINDS:
            raise ConstructionError(f"fading kind must be one of {FADING_KINDS}, got {self.kind!r}")
        if self.kind == "rice":
            if not self.rice_noncentrality >= 0:
                raise ConstructionError("rice noncentrality must be non-negative")
            if int(self.rice_dof) != self.rice_dof or self.rice_dof < 2 or self.rice_dof % 2:
                raise ConstructionError(f"rice dof must be an even positive integer, got {self.rice_dof}")


@dataclass(frozen=True)
class SimSpec:
    """Monte Carlo run settings.

    Attributes:
        trials: Number of independent network drops, at least 100.
        seed: Root seed; trial ``i`` uses the stream spawned at key ``i``.
        window_radius: Simulation disc radius in meters; ``None`` picks it
            from :func:`auto_window_radius`.
        min_expected_bs: Expected number of BSs in an auto-sized window.
    """

    trials: int = 10000
    seed: int = 0
    window_radius: float | None = None
    min_expected_bs: int = 300

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 100:
            raise ConstructionError(f"trials must be an integer >= 100, got {self.trials}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ConstructionError(f"seed must be a 64-bit non-negative integer, got {self.seed}")
        if self.window_radius is not None and not self.window_radius > 0:
            raise ConstructionError(f"window_radius must be positive, got {self.window_radius}")
        if not self.min_expected_bs >= 1:
            raise ConstructionError("min_expected_bs must be at least 1")


@dataclass(frozen=True)
class CpEstimate:
    """Coverage estimate with its 95% Wilson half-width."""

    mean: float
    ci_halfwidth: float
    trials: int
    seed: int


def auto_window_radius(model: PathlossModel, cfg: NetworkConfig, min_expected_bs: int = 300) -> float:
    """``max(sqrt(n / (pi lam)), 10 R_{N-1}, 100 delta_h)``."""
    return max(
        math.sqrt(min_expected_bs / (math.pi * cfg.lam)),
        10.0 * model.last_breakpoint,
        100.0 * cfg.delta_h,
    )


def wilson_halfwidth(successes: int, trials: int, z: float = WILSON_Z) -> float:
    """Half-width of the Wilson score interval."""
    p = successes / trials
    z2 = z * z
    return z / (1.0 + z2 / trials) * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials))


def trial_generator(seed: int, trial: int) -> np.random.Generator:
    """Independent generator for one trial, keyed by ``(seed, trial)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(trial,))))


def _ground_distances_sq(rng, lam, radius):
    """Squared ground distances of the PPP points inside the window, ascending."""
    area = math.pi * lam * radius * radius
    parts = [np.cumsum(rng.standard_exponential(BLOCK))]
    while parts[-1][-1] <= area:
        parts.append(parts[-1][-1] + np.cumsum(rng.standard_exponential(BLOCK)))
    gam = np.concatenate(parts)
    gam = gam[: np.searchsorted(gam, area, side="right")]
    return gam / (math.pi * lam)


def _interferer_gains(rng, fading, n):
    blocks = -(-n // BLOCK)
    if fading.kind == "rice":
        g = rng.noncentral_chisquare(fading.rice_dof, fading.rice_noncentrality, blocks * BLOCK)
    else:
        g = 2.0 * rng.standard_exponential(blocks * BLOCK)
    return g[:n]


def _desired_gain(rng, fading, n_antennas):
    if fading.kind == "rice":
        return float(rng.noncentral_chisquare(fading.rice_dof, fading.rice_noncentrality))
    if fading.kind == "beamforming":
        return 2.0 * float(rng.standard_gamma(n_antennas))
    return 2.0 * float(rng.standard_exponential())


def simulate_trial(
    model: PathlossModel,
    cfg: NetworkConfig,
    fading: FadingSpec,
    trial_rng: np.random.Generator,
    window_radius: float | None = None,
    gain_scale: float = 1.0,
) -> bool:
    """Draw one network and report whether the typical user is covered.

    The geometry and the fading gains come from two child streams of
    ``trial_rng``, so changing the window or the fading law leaves the other
    draw untouched. No BS in the window counts as outage; a lone serving BS
    (no interferers) counts as coverage.

    Args:
        gain_scale: Common factor applied to every fading gain. The SIR is
            invariant to it; exposed for testing.
    """
    radius = window_radius or auto_window_radius(model, cfg)
    geo_rng, fade_rng = trial_rng.spawn(2)
    r2 = _ground_distances_sq(geo_rng, cfg.lam, radius)
    if r2.size == 0:
        return False
    d = np.sqrt(r2 + cfg.delta_h * cfg.delta_h)
    path = gain(model, d)
    path = np.atleast_1d(path)
    desired = gain_scale * _desired_gain(fade_rng, fading, cfg.n_antennas) * path[0]
    if r2.size == 1:
        return True
    interference = float(np.dot(gain_scale * _interferer_gains(fade_rng, fading, r2.size - 1), path[1:]))
    if interference == 0.0:
        return True
    return bool(desired > cfg.tau * interference)


def _count_chunk(model, cfg, fading, seed, radius, start, stop):
    hits = 0
    for i in range(start, stop):
        hits += int(simulate_trial(model, cfg, fading, trial_generator(seed, i), radius))
    return hits


def estimate_cp(
    model: PathlossModel,
    cfg: NetworkConfig,
    fading: FadingSpec | None = None,
    sim: SimSpec | None = None,
    workers: int = 1,
) -> CpEstimate:
    """Success fraction over ``sim.trials`` independent drops.

    Trials are split into fixed chunks; the integer success counts are
    summed, so the result is identical for any ``workers``.
    """
    fading = fading or FadingSpec()
    sim = sim or SimSpec()
    radius = sim.window_radius or auto_window_radius(model, cfg, sim.min_expected_bs)
    bounds = [(s, min(s + CHUNK, sim.trials)) for s in range(0, sim.trials, CHUNK)]
    args = (model, cfg, fading, sim.seed, radius)
    if workers <= 1:
        counts = [_count_chunk(*args, a, b) for a, b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(lambda ab: _count_chunk(*args, *ab), bounds))
    hits = sum(counts)
    return CpEstimate(hits / sim.trials, wilson_halfwidth(hits, sim.trials), sim.trials, sim.seed)


def estimate_st(
    model: PathlossModel,
    cfg: NetworkConfig,
    fading: FadingSpec | None = None,
    sim: SimSpec | None = None,
    workers: int = 1,
) -> CpStPoint:
    """Monte Carlo coverage wrapped as a throughput point."""
    est = estimate_cp(model, cfg, fading, sim, workers)
    return CpStPoint(cfg.lam, est.mean, st_from_cp(cfg.lam, est.mean, cfg.tau), "monte_carlo", est.ci_halfwidth)


@dataclass(frozen=True)
class AgreementCell:
    """One analytic-versus-simulation comparison."""

    lam: float
    n_antennas: int
    analytic: float
    estimate: CpEstimate

    @property
    def deviation(self) -> float:
        """Distance from the analytic value in units of the half-width."""
        hw = self.estimate.ci_halfwidth
        return abs(self.estimate.mean - self.analytic) / hw if hw > 0 else math.inf

    @property
    def agrees(self) -> bool:
        return self.deviation <= 3.0


def agreement_grid(
    model: PathlossModel,
    base: NetworkConfig,
    lams=(1e-5, 1e-4, 1e-3),
    n_antennas=(1, 4, 16),
    sim: SimSpec | None = None,
    workers: int = 1,
) -> list[AgreementCell]:
    """Compare exact beamforming coverage with simulation over a density/antenna grid."""
    sim = sim or SimSpec()
    cells = []
    for lam in lams:
        for na in n_antennas:
            cfg = base.with_(lam=lam, n_antennas=na)
            est = estimate_cp(model, cfg, FadingSpec("beamforming"), sim, workers)
            cells.append(AgreementCell(lam, na, cp_miso_exact(model, cfg), est))
    return cells


__all__ = [
    "AgreementCell",
    "agreement_grid",
    "FadingSpec",
    "SimSpec",
    "CpEstimate",
    "auto_window_radius",
    "wilson_halfwidth",
    "trial_generator",
    "simulate_trial",
    "estimate_cp",
    "estimate_st",
]
