import math

import numpy as np
import pytest
from scipy.optimize import brentq

from densecell import montecarlo
from densecell.analytic import NetworkConfig, cp_miso_exact, cp_siso, st_from_cp
from densecell.errors import ConstructionError
from densecell.montecarlo import (
    CpEstimate,
    FadingSpec,
    SimSpec,
    auto_window_radius,
    estimate_cp,
    estimate_st,
    simulate_trial,
    trial_generator,
    wilson_halfwidth,
)
from densecell.pathloss import dspm, sspm

Z95 = 1.959963984540054


def wilson_oracle(k, n):
    """Half-width from the roots of |p_hat - p| = z sqrt(p (1 - p) / n)."""
    ph = k / n
    g = lambda p: (ph - p) ** 2 - Z95 * Z95 * p * (1 - p) / n
    tiny = 1e-15
    # at p_hat = 0 or 1 the endpoint itself is a trivial root of g; step off it
    lo = 0.0 if k == 0 else brentq(g, 0.0, ph - tiny if k == n else ph, xtol=1e-15)
    hi = 1.0 if k == n else brentq(g, ph + tiny if k == 0 else ph, 1.0, xtol=1e-15)
    return (hi - lo) / 2


@pytest.mark.parametrize("k, n", [(0, 100), (100, 100), (37, 100), (8000, 40000), (1, 1000)])
def test_wilson_halfwidth(k, n):
    assert wilson_halfwidth(k, n) == pytest.approx(wilson_oracle(k, n), rel=1e-9)


def test_spec_validation():
    with pytest.raises(ConstructionError):
        FadingSpec("nakagami")
    with pytest.raises(ConstructionError):
        FadingSpec("rice", rice_dof=3)
    with pytest.raises(ConstructionError):
        FadingSpec("rice", rice_noncentrality=-1.0)
    with pytest.raises(ConstructionError):
        SimSpec(trials=99)
    with pytest.raises(ConstructionError):
        SimSpec(seed=-1)
    with pytest.raises(ConstructionError):
        SimSpec(seed=2**64)
    with pytest.raises(ConstructionError):
        SimSpec(window_radius=0.0)


def test_auto_window_radius():
    cfg = NetworkConfig(lam=1e-4, delta_h=2.0)
    assert auto_window_radius(sspm(4.0), cfg) == pytest.approx(math.sqrt(300 / (math.pi * 1e-4)))
    assert auto_window_radius(dspm(2.5, 4.0, 500.0), cfg) == 5000.0
    assert auto_window_radius(sspm(4.0), NetworkConfig(lam=10.0, delta_h=2.0)) == 200.0


def test_all_covered_degenerate():
    cfg = NetworkConfig(lam=1e-4, delta_h=2.0, tau=1e-9)
    est = estimate_cp(sspm(4.0), cfg, FadingSpec("rayleigh"), SimSpec(trials=100, seed=3))
    assert est.mean == 1.0
    assert est.ci_halfwidth == pytest.approx(wilson_oracle(100, 100), rel=1e-9)
    assert est.ci_halfwidth <= 0.5


def test_trial_replay_is_deterministic(ref_dspm, ref_cfg):
    cfg = ref_cfg.with_(n_antennas=4)
    a = [simulate_trial(ref_dspm, cfg, FadingSpec(), trial_generator(11, i)) for i in range(50)]
    b = [simulate_trial(ref_dspm, cfg, FadingSpec(), trial_generator(11, i)) for i in range(50)]
    assert a == b
    assert all(isinstance(v, bool) for v in a)


def test_no_bs_is_outage_and_lone_bs_is_covered(monkeypatch, ref_sspm, ref_cfg):
    monkeypatch.setattr(montecarlo, "_ground_distances_sq", lambda rng, lam, r: np.zeros(0))
    assert simulate_trial(ref_sspm, ref_cfg, FadingSpec(), trial_generator(0, 0)) is False
    monkeypatch.setattr(montecarlo, "_ground_distances_sq", lambda rng, lam, r: np.array([25.0]))
    assert simulate_trial(ref_sspm, ref_cfg.with_(tau=1e12), FadingSpec(), trial_generator(0, 0)) is True


def test_vanishing_threshold_always_covers(ref_dspm):
    cfg = NetworkConfig(lam=1e-3, delta_h=2.0, tau=1e-12)
    assert all(simulate_trial(ref_dspm, cfg, FadingSpec("rayleigh"), trial_generator(5, i)) for i in range(200))


@pytest.mark.parametrize("kind", ["rayleigh", "beamforming", "rice"])
def test_gain_scale_invariance(kind, ref_dspm, ref_cfg):
    cfg = ref_cfg.with_(n_antennas=4, lam=1e-3)
    fading = FadingSpec(kind)
    for i in range(200):
        a = simulate_trial(ref_dspm, cfg, fading, trial_generator(7, i))
        b = simulate_trial(ref_dspm, cfg, fading, trial_generator(7, i), gain_scale=2.0)
        assert a == b


def test_worker_count_does_not_change_estimate(ref_dspm, ref_cfg):
    sim = SimSpec(trials=2500, seed=99)
    cfg = ref_cfg.with_(n_antennas=4)
    serial = estimate_cp(ref_dspm, cfg, FadingSpec(), sim, workers=1)
    parallel = estimate_cp(ref_dspm, cfg, FadingSpec(), sim, workers=4)
    assert serial == parallel
    assert isinstance(serial, CpEstimate) and serial.seed == 99 and serial.trials == 2500


def test_window_doubling_is_within_ci(ref_dspm, ref_cfg):
    cfg = ref_cfg.with_(n_antennas=4, lam=1e-3)
    r = auto_window_radius(ref_dspm, cfg)
    a = estimate_cp(ref_dspm, cfg, FadingSpec(), SimSpec(trials=4000, seed=4, window_radius=r))
    b = estimate_cp(ref_dspm, cfg, FadingSpec(), SimSpec(trials=4000, seed=4, window_radius=2 * r))
    assert abs(a.mean - b.mean) < a.ci_halfwidth


def test_rayleigh_matches_siso_closed_form():
    cfg = NetworkConfig(lam=1e-4, delta_h=0.0, tau=10.0)
    est = estimate_cp(sspm(4.0), cfg, FadingSpec("rayleigh"), SimSpec(trials=40000, seed=2024))
    assert abs(est.mean - 0.2001) <= 3 * est.ci_halfwidth
    assert abs(est.mean - cp_siso(sspm(4.0), cfg)) <= 3 * est.ci_halfwidth


@pytest.mark.parametrize("na", [4, 16])
def test_beamforming_matches_exact(na, ref_sspm, ref_cfg):
    cfg = ref_cfg.with_(n_antennas=na)
    est = estimate_cp(ref_sspm, cfg, FadingSpec(), SimSpec(trials=20000, seed=17))
    assert abs(est.mean - cp_miso_exact(ref_sspm, cfg)) <= 3 * est.ci_halfwidth


def test_rayleigh_ignores_antenna_count(ref_sspm, ref_cfg):
    sim = SimSpec(trials=500, seed=8)
    a = estimate_cp(ref_sspm, ref_cfg.with_(n_antennas=1), FadingSpec("rayleigh"), sim)
    b = estimate_cp(ref_sspm, ref_cfg.with_(n_antennas=16), FadingSpec("rayleigh"), sim)
    assert a == b


def test_coverage_decreases_with_height(ref_dspm):
    sim = SimSpec(trials=4000, seed=21)
    ests = [estimate_cp(ref_dspm, NetworkConfig(lam=1e-2, delta_h=h, tau=10.0), FadingSpec("rayleigh"), sim) for h in (0.0, 1.0, 2.0, 5.0)]
    for a, b in zip(ests, ests[1:]):
        assert b.mean <= a.mean + max(a.ci_halfwidth, b.ci_halfwidth)
    assert ests[-1].mean < ests[0].mean


def test_estimate_st_wraps_cp(ref_sspm, ref_cfg):
    sim = SimSpec(trials=300, seed=1)
    pt = estimate_st(ref_sspm, ref_cfg, FadingSpec(), sim)
    est = estimate_cp(ref_sspm, ref_cfg, FadingSpec(), sim)
    assert pt.method == "monte_carlo"
    assert pt.cp == est.mean and pt.ci_halfwidth == est.ci_halfwidth
    assert pt.st == st_from_cp(ref_cfg.lam, est.mean, ref_cfg.tau)


def test_st_vanishes_at_low_density(ref_sspm):
    pt = estimate_st(ref_sspm, NetworkConfig(lam=1e-12, delta_h=2.0), FadingSpec(), SimSpec(trials=100))
    assert pt.st < 1e-11


def test_rice_coverage_decays_at_high_density(ref_dspm):
    lams = np.array([1e-2, 3e-2, 1e-1])
    sim = SimSpec(trials=3000, seed=5)
    fading = FadingSpec("rice", rice_noncentrality=1.0, rice_dof=12)
    cps = [estimate_cp(ref_dspm, NetworkConfig(lam=l, delta_h=2.0, tau=10.0), fading, sim).mean for l in lams]
    slope = np.polyfit(lams, np.log(np.maximum(cps, 1e-4)), 1)[0]
    assert slope < 0


def test_agreement_grid_cells(ref_sspm, ref_cfg):
    cells = montecarlo.agreement_grid(ref_sspm, ref_cfg, lams=(1e-4,), n_antennas=(1, 4), sim=SimSpec(trials=2000, seed=3))
    assert len(cells) == 2
    assert all(c.agrees for c in cells)
