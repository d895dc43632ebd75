import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from densecell import analytic
from densecell.analytic import (
    CpStPoint,
    NetworkConfig,
    coverage,
    coverage_terms,
    cp_miso_approx,
    cp_miso_exact,
    cp_siso,
    cp_siso_lower_bound,
    cp_siso_upper_bound,
    eta_derivatives,
    evaluate,
    interference_integral,
    st_from_cp,
)
from densecell.errors import ConstructionError, DomainError, NumericalInstabilityError
from densecell.pathloss import dspm, gain, make_mspm, sspm


def delta4(tau):
    # delta(tau, 4) through the arctan identity
    return math.sqrt(tau) * math.atan(math.sqrt(tau))


# ---------------------------------------------------------------------------
# oracles in the ground-distance variable, built directly on scipy quad


def _ratio(model, r, r0, dh):
    return gain(model, math.hypot(r, dh)) / gain(model, math.hypot(r0, dh))


def _phi_terms(model, lam, r0, dh, sigma, order):
    """phi, phi', phi'' of phi(sigma) = 2 pi lam int_r0^inf r sigma a / (1 + sigma a) dr, up to ``order``."""
    pts = [math.sqrt(R * R - dh * dh) for R in model.breakpoints if R > dh]
    pts = [p for p in pts if p > r0]

    def piece(fn):
        edges = [r0] + pts + [math.inf]
        tot = 0.0
        for lo, hi in zip(edges, edges[1:]):
            tot += quad(fn, lo, hi, epsabs=0, epsrel=1e-12, limit=500)[0]
        return 2 * math.pi * lam * tot

    a = lambda r: _ratio(model, r, r0, dh)
    phi = piece(lambda r: r * sigma * a(r) / (1 + sigma * a(r)))
    d1 = piece(lambda r: r * a(r) / (1 + sigma * a(r)) ** 2) if order >= 1 else 0.0
    d2 = -piece(lambda r: 2 * r * a(r) ** 2 / (1 + sigma * a(r)) ** 3) if order >= 2 else 0.0
    return phi, d1, d2


def oracle_cp(model, cfg, n_antennas):
    """Coverage for Na in {1, 2, 3} from explicit Laplace derivatives."""
    lam, dh, tau = cfg.lam, cfg.delta_h, cfg.tau

    def cond(r0):
        phi, d1, d2 = _phi_terms(model, lam, r0, dh, tau, n_antennas - 1)
        terms = [1.0, tau * d1, 0.5 * tau * tau * (d1 * d1 - d2)]
        return math.exp(-phi) * sum(terms[:n_antennas])

    pts = [math.sqrt(R * R - dh * dh) for R in model.breakpoints if R > dh]
    edges = [0.0] + pts + [math.sqrt(math.log(1e12) / (math.pi * lam))]
    tot = 0.0
    for lo, hi in zip(edges, edges[1:]):
        tot += quad(lambda r: 2 * math.pi * lam * r * math.exp(-math.pi * lam * r * r) * cond(r), lo, hi, epsrel=1e-10, limit=200)[0]
    return tot


# ---------------------------------------------------------------------------


def test_network_config_validation():
    for bad in [dict(lam=0.0), dict(lam=1.0, delta_h=-1), dict(lam=1.0, power=0), dict(lam=1.0, tau=0),
                dict(lam=1.0, n_antennas=0), dict(lam=1.0, n_antennas=1.5), dict(lam=1.0, cp_requirement=1.0)]:
        with pytest.raises(ConstructionError):
            NetworkConfig(**bad)
    cfg = NetworkConfig(lam=1.0, tau=10.0, n_antennas=16)
    assert cfg.tau_dagger == 0.625
    assert cfg.with_(n_antennas=4).tau_dagger == 2.5


def test_cp_st_point():
    with pytest.raises(ConstructionError):
        CpStPoint(1.0, 0.5, 0.5, "nope")
    assert st_from_cp(1e-4, 0.2001, 10.0) == pytest.approx(6.923e-5, rel=1e-3)
    assert st_from_cp(3.0, 1.0, 1.0) == 3.0
    assert st_from_cp(0.0, 0.5, 10.0) == 0.0


@pytest.mark.parametrize("lam", [1e-6, 1e-4, 1e-2, 1.0])
def test_sspm_no_height_is_density_invariant(lam):
    cfg = NetworkConfig(lam=lam, delta_h=0.0, tau=10.0)
    assert cp_siso(sspm(4.0), cfg) == pytest.approx(1.0 / (1.0 + delta4(10.0)), abs=1e-9)


def test_sspm_with_height_closed_form(ref_cfg):
    expected = math.exp(-math.pi * 1e-4 * delta4(10.0) * 4.0) / (1.0 + delta4(10.0))
    assert cp_siso(sspm(4.0), ref_cfg) == pytest.approx(expected, rel=1e-12)
    assert cp_siso(sspm(4.0), ref_cfg) == pytest.approx(0.1991, abs=1e-4)


def test_interference_integral_sspm_matches_delta():
    # I(d0) = d0**2 delta(tau, alpha) / 2 for a single slope
    for d0 in (0.3, 2.0, 75.0):
        assert interference_integral(sspm(4.0), d0, 10.0) == pytest.approx(d0 * d0 * delta4(10.0) / 2, rel=1e-12)


@pytest.mark.parametrize(
    "model",
    [dspm(2.5, 4.0, 10.0), make_mspm([2.0, 3.0, 4.0], [10.0, 50.0]), make_mspm([0.0, 2.5, 4.5], [1.0, 20.0])],
)
@pytest.mark.parametrize("lam", [1e-4, 3e-3])
def test_siso_matches_ground_distance_oracle(model, lam):
    cfg = NetworkConfig(lam=lam, delta_h=2.0, tau=10.0)
    assert cp_siso(model, cfg) == pytest.approx(oracle_cp(model, cfg, 1), rel=1e-7)


@pytest.mark.parametrize("na", [2, 3])
@pytest.mark.parametrize("model", [sspm(4.0), dspm(2.5, 4.0, 10.0)])
def test_miso_exact_matches_derivative_oracle(model, na):
    cfg = NetworkConfig(lam=1e-3, delta_h=2.0, tau=10.0, n_antennas=na)
    assert cp_miso_exact(model, cfg) == pytest.approx(oracle_cp(model, cfg, na), rel=1e-6)


def test_frozen_reference_values(ref_cfg, ref_dspm, ref_sspm):
    # frozen from the oracles above and the arctan identity
    assert cp_siso(ref_dspm, ref_cfg) == pytest.approx(0.19855665, abs=1e-7)
    assert cp_miso_exact(ref_sspm, ref_cfg.with_(n_antennas=16, lam=1e-6)) == pytest.approx(0.77681550, abs=1e-6)
    assert cp_miso_exact(ref_dspm, ref_cfg.with_(n_antennas=16)) == pytest.approx(0.77652298, abs=1e-6)
    assert cp_miso_approx(ref_sspm, ref_cfg.with_(n_antennas=16, lam=1e-6)) == pytest.approx(0.6540773, abs=1e-6)


@pytest.mark.parametrize("model", [sspm(4.0), dspm(2.5, 4.0, 10.0)])
def test_single_antenna_reductions(model, ref_cfg):
    siso = cp_siso(model, ref_cfg)
    assert cp_miso_exact(model, ref_cfg) == pytest.approx(siso, abs=1e-8)
    assert cp_miso_approx(model, ref_cfg) == siso


def test_vanishing_threshold_gives_full_coverage(ref_dspm):
    cfg = NetworkConfig(lam=1e-3, delta_h=2.0, tau=1e-9)
    assert cp_siso(ref_dspm, cfg) == pytest.approx(1.0, abs=1e-7)


def test_eta_zero_order_matches_siso_exponent(ref_cfg):
    d0 = 7.0
    s = ref_cfg.tau / (2 * ref_cfg.power * d0**-4)
    eta = eta_derivatives(sspm(4.0), ref_cfg, d0, s, 0)
    assert eta[0] == pytest.approx(-math.pi * ref_cfg.lam * d0 * d0 * delta4(10.0), rel=1e-12)


@pytest.mark.parametrize("model", [sspm(4.0), dspm(2.5, 4.0, 10.0)])
def test_eta_derivatives_vs_finite_differences(model, ref_cfg):
    d0 = 6.0
    s = ref_cfg.tau / (2 * ref_cfg.power * gain(model, d0))
    eta = eta_derivatives(model, ref_cfg, d0, s, 4)
    f = lambda x: eta_derivatives(model, ref_cfg, d0, x, 0)[0]
    h1, h2 = 1e-4 * s, 1e-3 * s
    d1 = (f(s + h1) - f(s - h1)) / (2 * h1)
    d2 = (f(s + h2) - 2 * f(s) + f(s - h2)) / (h2 * h2)
    assert eta[1] == pytest.approx(d1, rel=1e-5)
    assert eta[2] == pytest.approx(d2, rel=1e-5)
    assert eta[0] < 0
    for n in range(1, 5):
        assert (-1) ** n * eta[n] > 0


def test_eta_derivatives_vanish_with_density():
    cfg = NetworkConfig(lam=1e-14, delta_h=2.0, tau=10.0)
    eta = eta_derivatives(sspm(4.0), cfg, 5.0, 1.0, 3)
    assert max(abs(v) for v in eta) < 1e-9


def test_eta_derivatives_domain(ref_cfg):
    with pytest.raises(DomainError):
        eta_derivatives(sspm(4.0), ref_cfg, 1.0, 1.0, 2)  # d0 < delta_h
    with pytest.raises(DomainError):
        eta_derivatives(sspm(4.0), ref_cfg, 3.0, 0.0, 2)


def test_coverage_terms_are_probability_masses(ref_dspm, ref_cfg):
    terms = coverage_terms(ref_dspm, ref_cfg.with_(n_antennas=16), 12.0)
    assert np.all(terms >= 0)
    partial = np.cumsum(terms)
    assert np.all(np.diff(partial) >= 0)
    assert partial[-1] <= 1.0


def test_checked_probability():
    assert analytic._checked_probability(1.0 + 1e-12, "x") == 1.0
    assert analytic._checked_probability(-1e-12, "x") == 0.0
    with pytest.raises(NumericalInstabilityError):
        analytic._checked_probability(1.0 + 1e-6, "x")


def test_lower_bound_reference(ref_dspm, ref_cfg):
    d = delta4(10.0)
    expected = math.exp(-math.pi * 1e-4 * (100 + d * 104)) / (1 + d)
    assert cp_siso_lower_bound(ref_dspm, ref_cfg) == pytest.approx(expected, rel=1e-12)
    assert cp_siso_lower_bound(ref_dspm, ref_cfg) == pytest.approx(0.1701, abs=1e-4)


def test_bounds_tight_for_single_slope(ref_sspm, ref_cfg):
    exact = cp_siso(ref_sspm, ref_cfg)
    assert cp_siso_lower_bound(ref_sspm, ref_cfg) == pytest.approx(exact, rel=1e-14)
    assert cp_siso_upper_bound(ref_sspm, ref_cfg) == exact


def test_upper_bound_requires_height(ref_dspm):
    with pytest.raises(DomainError):
        cp_siso_upper_bound(ref_dspm, NetworkConfig(lam=1e-4, delta_h=0.0))


@pytest.mark.parametrize("model", [dspm(2.5, 4.0, 10.0), make_mspm([2.0, 3.0, 4.0], [10.0, 50.0])])
def test_bound_sandwich(model):
    for lam in np.geomspace(1e-5, 1.0, 9):
        cfg = NetworkConfig(lam=lam, delta_h=2.0, tau=10.0)
        exact = cp_siso(model, cfg)
        assert cp_siso_lower_bound(model, cfg) <= exact <= cp_siso_upper_bound(model, cfg)


def _nonincreasing(vals, slack=1e-9):
    return all(b <= a + slack for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("fn", [cp_siso, cp_miso_exact, cp_miso_approx])
def test_monotonicity(fn, ref_dspm):
    base = NetworkConfig(lam=1e-3, delta_h=2.0, tau=10.0, n_antennas=4)
    assert _nonincreasing([fn(ref_dspm, base.with_(tau=t)) for t in (0.5, 1.0, 3.0, 10.0, 30.0)])
    assert _nonincreasing([fn(ref_dspm, base.with_(delta_h=h)) for h in (0.0, 1.0, 2.0, 5.0, 10.0)])
    assert _nonincreasing([fn(ref_dspm, base.with_(lam=l)) for l in (1e-5, 1e-4, 1e-3, 1e-2, 1e-1)])


def test_antenna_ordering(ref_dspm):
    base = NetworkConfig(lam=1e-3, delta_h=2.0, tau=10.0)
    exact = [cp_miso_exact(ref_dspm, base.with_(n_antennas=n)) for n in (1, 2, 4, 8)]
    approx = [cp_miso_approx(ref_dspm, base.with_(n_antennas=n)) for n in (1, 2, 4, 8)]
    siso = cp_siso(ref_dspm, base)
    assert all(siso <= e + 1e-12 for e in exact)
    assert _nonincreasing(exact[::-1]) and _nonincreasing(approx[::-1])
    # exponential approximation sits below the exact value
    assert all(a <= e + 1e-12 for a, e in zip(approx, exact))


def test_dispatch(ref_sspm, ref_cfg):
    assert coverage(ref_sspm, ref_cfg, "siso_exact") == cp_siso(ref_sspm, ref_cfg)
    pt = evaluate(ref_sspm, ref_cfg, "siso_lower_bound")
    assert pt.st == st_from_cp(pt.lam, pt.cp, ref_cfg.tau)
    with pytest.raises(DomainError):
        coverage(ref_sspm, ref_cfg, "monte_carlo")


@settings(max_examples=15, deadline=None)
@given(
    a0=st.floats(min_value=0.0, max_value=3.5),
    a1=st.floats(min_value=2.2, max_value=5.0),
    r1=st.floats(min_value=1.0, max_value=200.0),
    lam=st.floats(min_value=1e-6, max_value=1e-1),
    dh=st.floats(min_value=0.0, max_value=10.0),
    tau=st.floats(min_value=0.05, max_value=50.0),
)
def test_siso_is_probability(a0, a1, r1, lam, dh, tau):
    model = make_mspm([a0, max(a0, a1)], [r1])
    cp = cp_siso(model, NetworkConfig(lam=lam, delta_h=dh, tau=tau))
    assert 0.0 <= cp <= 1.0


@pytest.mark.xfail(strict=True, reason="approximate peak density exceeds the exact one by 45% at Na=16, 10 dB")
def test_exact_and_approx_peaks_close(ref_sspm):
    from densecell.density import throughput_peak

    cfg = NetworkConfig(lam=1e-4, delta_h=2.0, tau=10.0, n_antennas=16)
    lam_exact, _ = throughput_peak(ref_sspm, cfg, "miso_exact", lo=1e-4, hi=1e0)
    lam_approx, _ = throughput_peak(ref_sspm, cfg, "miso_approx", lo=1e-4, hi=1e0)
    assert lam_exact == pytest.approx(lam_approx, rel=0.15)
