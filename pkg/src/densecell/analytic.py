"""Coverage probability and spatial throughput in closed and semi-closed form.

Conventions
-----------
* The typical user sits at the origin; base stations form a PPP of
  intensity ``lam`` per square meter and the user attaches to the nearest
  one in the ground plane. Every link length is the 3-D distance
  ``d = sqrt(r**2 + delta_h**2)``.
* Interferer power gains are ``chi2(2)`` (mean 2). With beamforming over
  ``n_antennas`` antennas the desired gain is ``chi2(2 * n_antennas)``.
  The factor 2 is kept explicit: the Laplace transform of the interference
  is evaluated at ``s = tau / (2 P l(d0))``.
* Noise is ignored, so the transmit power cancels from every probability.

The single-antenna coverage conditioned on the serving distance is
``exp(-2 pi lam I(d0))`` with

    I(d0) = int_{d0}^inf x * u(x) / (1 + u(x)) dx,   u(x) = tau l(x) / l(d0),

which is evaluated segment by segment through the hypergeometric
shorthands of :mod:`densecell.specfun`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConstructionError, DomainError, NumericalInstabilityError
from .pathloss import PathlossModel, gain
from .specfun import DEFAULT_QUADRATURE, QuadratureSpec, delta, integrate, omega1, omega2

METHODS = (
    "siso_exact",
    "miso_exact",
    "miso_approx",
    "siso_lower_bound",
    "siso_upper_bound",
    "monte_carlo",
)

# contact distance is truncated where its CDF reaches 1 - 1e-12
CONTACT_TAIL = math.log(1e12)
PROBABILITY_SLACK = 1e-9


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class NetworkConfig:
    """Deployment and link parameters, all in SI units.

    Attributes:
        lam: Base-station density per square meter.
        delta_h: Antenna height difference between BSs and users (m).
        power: BS transmit power (W). Cancels in every SIR expression.
        tau: Linear SIR decoding threshold.
        n_antennas: Antennas per BS used for single-user beamforming.
        cp_requirement: Minimum acceptable coverage probability, in [0, 1).
    """

    lam: float
    delta_h: float = 0.0
    power: float = dbm_to_watts(23.0)
    tau: float = 10.0
    n_antennas: int = 1
    cp_requirement: float = 0.0

    def __post_init__(self):
        if not self.lam > 0:
            raise ConstructionError(f"lam must be positive, got {self.lam}")
        if not self.delta_h >= 0:
            raise ConstructionError(f"delta_h must be non-negative, got {self.delta_h}")
        if not self.power > 0:
            raise ConstructionError(f"power must be positive, got {self.power}")
        if not self.tau > 0:
            raise ConstructionError(f"tau must be positive, got {self.tau}")
        if int(self.n_antennas) != self.n_antennas or self.n_antennas < 1:
            raise ConstructionError(f"n_antennas must be a positive integer, got {self.n_antennas}")
        if not 0 <= self.cp_requirement < 1:
            raise ConstructionError(f"cp_requirement must lie in [0, 1), got {self.cp_requirement}")

    @property
    def tau_dagger(self) -> float:
        """Effective threshold ``tau / n_antennas`` of the exponential approximation."""
        return self.tau / self.n_antennas

    def with_(self, **changes) -> "NetworkConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class CpStPoint:
    """Coverage and spatial throughput at one density.

    ``st`` is in bits/(s Hz m^2). ``ci_halfwidth`` is set for Monte Carlo
    estimates only.
    """

    lam: float
    cp: float
    st: float
    method: str
    ci_halfwidth: float | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConstructionError(f"unknown method tag {self.method!r}")


def st_from_cp(lam: float, cp: float, tau: float) -> float:
    """Spatial throughput ``lam * cp * log2(1 + tau)``."""
    return lam * cp * math.log2(1.0 + tau)


# ---------------------------------------------------------------------------
# single-antenna interference functional


def _segment_integral(alpha, c, lo, hi):
    """``int_lo^hi x / (1 + x**alpha / c) dx`` for ``0 < lo < hi <= inf``."""
    if alpha == 0.0:
        if math.isinf(hi):
            raise DomainError("a zero exponent cannot extend to infinity")
        return 0.5 * (hi * hi - lo * lo) * c / (1.0 + c)
    if math.isinf(hi):
        # tail in omega1 form, needs alpha > 2 (guaranteed for the last slope)
        ratio = c * lo ** (-alpha)
        return ratio * lo * lo / (alpha - 2.0) * omega1(ratio, alpha)
    w = omega2([hi**alpha / c, lo**alpha / c], alpha)
    return 0.5 * (hi * hi * w[0] - lo * lo * w[1])


def interference_integral(model: PathlossModel, d0: float, tau: float) -> float:
    """``I(d0) = int_{d0}^inf x u/(1+u) dx`` with ``u(x) = tau l(x) / l(d0)``.

    The coverage of a single-antenna user served at 3-D distance ``d0`` is
    ``exp(-2 pi lam I(d0))``.
    """
    if not d0 > 0:
        raise DomainError("serving distance must be positive")
    n0 = model.segment(d0)
    log_l0 = model.log_amplitudes[n0] - model.exponents[n0] * math.log(d0)
    edges = model.edges
    total = 0.0
    for j in range(n0, model.n_slopes):
        lo = max(d0, edges[j])
        hi = edges[j + 1]
        c = tau * math.exp(model.log_amplitudes[j] - log_l0)
        total += _segment_integral(model.exponents[j], c, lo, hi)
    return total


def _contact_points(model: PathlossModel, lam: float, delta_h: float):
    """Breakpoints of the serving segment in the variable ``v = pi lam r0**2``."""
    out = []
    for r in model.breakpoints:
        if r > delta_h:
            v = math.pi * lam * (r * r - delta_h * delta_h)
            if v < CONTACT_TAIL:
                out.append(v)
    return out


def _serving_distance(v, lam, delta_h):
    return math.sqrt(v / (math.pi * lam) + delta_h * delta_h)


def _expect_over_contact(cond, model, cfg, spec):
    """``E[cond(d0)]`` over the PPP contact distance.

    Uses ``v = pi lam r0**2``, which is Exp(1), so the expectation is
    ``int_0^inf exp(-v) cond(d0(v)) dv`` truncated at ``CONTACT_TAIL``.
    """
    lam, dh = cfg.lam, cfg.delta_h

    def f(v):
        d0 = _serving_distance(v, lam, dh)
        if d0 == 0.0:
            d0 = 1e-300
        return math.exp(-v) * cond(d0)

    return integrate(f, 0.0, CONTACT_TAIL, spec, points=_contact_points(model, lam, dh))


def _single_antenna_cp(model, cfg, tau, spec):
    if model.n_slopes == 1:
        dl = delta(tau, model.exponents[0])
        return math.exp(-math.pi * cfg.lam * dl * cfg.delta_h**2) / (1.0 + dl)
    two_pi_lam = 2.0 * math.pi * cfg.lam
    val = _expect_over_contact(
        lambda d0: math.exp(-two_pi_lam * interference_integral(model, d0, tau)), model, cfg, spec
    )
    return _checked_probability(val, "single-antenna coverage")


def _checked_probability(p, what):
    if p < -PROBABILITY_SLACK or p > 1.0 + PROBABILITY_SLACK:
        raise NumericalInstabilityError(
            f"{what} evaluated to {p!r}, outside [0, 1]; tighten the quadrature tolerances"
        )
    return min(max(p, 0.0), 1.0)


def cp_siso(model: PathlossModel, cfg: NetworkConfig, spec: QuadratureSpec | None = None) -> float:
    """Single-antenna coverage probability under Rayleigh fading.

    Closed form for a single slope; otherwise a one-dimensional expectation
    over the contact distance whose integrand is assembled from the
    hypergeometric shorthands. ``cfg.n_antennas`` is ignored.
    """
    return _single_antenna_cp(model, cfg, cfg.tau, spec or DEFAULT_QUADRATURE)


def cp_miso_approx(model: PathlossModel, cfg: NetworkConfig, spec: QuadratureSpec | None = None) -> float:
    """Beamforming coverage with the desired gain replaced by an exponential of equal mean.

    This is :func:`cp_siso` evaluated at the threshold ``tau / n_antennas``.
    """
    return _single_antenna_cp(model, cfg, cfg.tau_dagger, spec or DEFAULT_QUADRATURE)


# ---------------------------------------------------------------------------
# beamforming: derivatives of the interference Laplace transform


def _derivative_moments(model, lam, d0, tau_eff, k_max, spec):
    """``e_m = 2 pi lam int_{d0}^inf x v**m / (1+v)**(m+1) dx`` for ``m = 1..k_max``.

    Here ``v(x) = tau_eff l(x) / l(d0)`` equals ``2 s P l(x)``. With
    ``x = d0 t`` the integral runs over ``t >= 1`` and does not depend on
    the length scale of ``d0``.
    """
    if k_max == 0:
        return np.zeros(0)
    m = np.arange(1, k_max + 1, dtype=float)
    l0 = gain(model, d0)
    points = [r / d0 for r in model.breakpoints if r > d0]

    def f(t):
        v = tau_eff * gain(model, d0 * t) / l0
        if v == 0.0:
            return np.zeros(k_max)
        # v**m / (1+v)**(m+1) in log space, stable for large m
        return t * np.exp(m * math.log(v / (1.0 + v)) - math.log1p(v))

    moments = integrate(f, 1.0, math.inf, spec, points=points)
    return 2.0 * math.pi * lam * d0 * d0 * np.asarray(moments, dtype=float)


def eta_derivatives(
    model: PathlossModel,
    cfg: NetworkConfig,
    d0: float,
    s: float,
    k_max: int,
    spec: QuadratureSpec | None = None,
) -> list[float]:
    """``[eta(s), eta'(s), ..., eta^(k_max)(s)]`` where ``L_I(s) = exp(eta(s))``.

    ``eta(s) = -2 pi lam int_{d0}^inf x (1 - 1/(1 + 2 s P l(x))) dx`` is the
    log-Laplace transform of the interference seen by a user served at 3-D
    distance ``d0``. Derivatives are taken under the integral sign; their
    signs alternate, ``(-1)**n eta^(n) > 0`` for ``n >= 1``.
    """
    spec = spec or DEFAULT_QUADRATURE
    if d0 < cfg.delta_h or not d0 > 0:
        raise DomainError(f"serving distance {d0} must be positive and at least delta_h")
    if not s > 0:
        raise DomainError(f"s must be positive, got {s}")
    k_max = int(k_max)
    if k_max < 0:
        raise DomainError("k_max must be non-negative")
    tau_eff = 2.0 * s * cfg.power * gain(model, d0)
    eta0 = -2.0 * math.pi * cfg.lam * interference_integral(model, d0, tau_eff)
    moments = _derivative_moments(model, cfg.lam, d0, tau_eff, k_max, spec)
    out = [eta0]
    for n, e in enumerate(moments, start=1):
        out.append((-1.0) ** n * math.factorial(n) * s ** (-n) * e)
    return out


def coverage_terms(
    model: PathlossModel,
    cfg: NetworkConfig,
    d0: float,
    spec: QuadratureSpec | None = None,
) -> np.ndarray:
    """Terms ``(-s)**k / k! * L_I^(k)(s)`` for ``k < n_antennas`` at ``s = tau/(2 P l(d0))``.

    Their sum is the beamforming coverage conditioned on the serving
    distance. Each term is the probability that a Poisson-mixed count
    equals ``k``, hence non-negative. They are built from the
    exp-composition recursion ``L^(k) = sum_j C(k-1, j) eta^(k-j) L^(j)``,
    rescaled by ``(-s)**k / k!`` so that every summand is non-negative:

        p_k = sum_{m=1}^{k} (m / k) e_m p_{k-m},   p_0 = exp(eta).
    """
    spec = spec or DEFAULT_QUADRATURE
    n = int(cfg.n_antennas)
    p = np.empty(n)
    p[0] = math.exp(-2.0 * math.pi * cfg.lam * interference_integral(model, d0, cfg.tau))
    e = _derivative_moments(model, cfg.lam, d0, cfg.tau, n - 1, spec)
    for k in range(1, n):
        m = np.arange(1, k + 1)
        p[k] = np.dot(m * e[:k], p[k - m]) / k
    return p


def _conditional_miso_coverage(model, cfg, d0, spec):
    terms = coverage_terms(model, cfg, d0, spec)
    partial = np.cumsum(terms)
    if partial.min() < -PROBABILITY_SLACK or partial.max() > 1.0 + PROBABILITY_SLACK:
        raise NumericalInstabilityError(
            f"partial coverage sums left [0, 1] at d0={d0:g}: {partial.min()!r}..{partial.max()!r}; "
            "tighten the quadrature tolerances"
        )
    return min(max(float(partial[-1]), 0.0), 1.0)


def cp_miso_exact(model: PathlossModel, cfg: NetworkConfig, spec: QuadratureSpec | None = None) -> float:
    """Exact coverage probability with single-user beamforming.

    Averages the conditional coverage ``sum_k (-s)^k/k! L_I^(k)(s)`` over the
    contact distance. ``n_antennas = 1`` reduces to :func:`cp_siso`.

    Raises:
        NumericalInstabilityError: when a partial sum leaves ``[0, 1]`` by
            more than ``1e-9``.
    """
    spec = spec or DEFAULT_QUADRATURE
    # inner moments are themselves quadratures, so the outer rule gets
    # a slightly looser relative target to stay above their noise floor
    outer = replace(spec, rel_tol=max(spec.rel_tol, 1e-8))
    val = _expect_over_contact(
        lambda d0: _conditional_miso_coverage(model, cfg, d0, spec), model, cfg, outer
    )
    return _checked_probability(val, "beamforming coverage")


# ---------------------------------------------------------------------------
# scaling-law bounds


def cp_siso_lower_bound(model: PathlossModel, cfg: NetworkConfig) -> float:
    """Lower bound on :func:`cp_siso` keeping only users beyond the last breakpoint.

    Tight (equal to the exact value) for a single-slope model.
    """
    r = model.last_breakpoint
    dl = delta(cfg.tau, model.last_exponent)
    expo = math.pi * cfg.lam * (r * r + dl * (r * r + cfg.delta_h**2))
    return math.exp(-expo) / (1.0 + dl)


def upper_bound_rates(model: PathlossModel, cfg: NetworkConfig) -> list[float]:
    """The per-segment constants ``q1(n)`` of the upper bound, ``n = 0..N-2``."""
    if cfg.delta_h <= 0:
        raise DomainError("the coverage upper bound needs delta_h > 0")
    alpha = model.last_exponent
    r = model.last_breakpoint
    r_bar = math.hypot(r, cfg.delta_h)
    log_k_last = model.log_amplitudes[-1]
    out = []
    for n in range(model.n_slopes - 1):
        ratio = cfg.tau * math.exp(log_k_last - model.log_amplitudes[n])
        out.append(
            ratio
            * r_bar ** (2.0 - alpha)
            * cfg.delta_h ** model.exponents[n]
            / (alpha - 2.0)
            * omega1(ratio, alpha)
        )
    return out


def cp_siso_upper_bound(model: PathlossModel, cfg: NetworkConfig) -> float:
    """Upper bound ``sum_n exp(-2 pi lam q1(n)) + exp(-pi lam R_{N-1}^2)`` on :func:`cp_siso`.

    Not a probability: it may exceed 1 at low density. For a single slope
    the exact value is returned.
    """
    if model.n_slopes == 1:
        return cp_siso(model, cfg)
    r = model.last_breakpoint
    total = sum(math.exp(-2.0 * math.pi * cfg.lam * q) for q in upper_bound_rates(model, cfg))
    return total + math.exp(-math.pi * cfg.lam * r * r)


# ---------------------------------------------------------------------------


_CP_FUNCTIONS = {
    "siso_exact": cp_siso,
    "miso_exact": cp_miso_exact,
    "miso_approx": cp_miso_approx,
    "siso_lower_bound": lambda m, c, spec=None: cp_siso_lower_bound(m, c),
    "siso_upper_bound": lambda m, c, spec=None: cp_siso_upper_bound(m, c),
}


def coverage(model: PathlossModel, cfg: NetworkConfig, method: str, spec: QuadratureSpec | None = None) -> float:
    """Dispatch on an analytic method tag."""
    try:
        fn = _CP_FUNCTIONS[method]
    except KeyError:
        raise DomainError(f"no analytic coverage for method {method!r}") from None
    return fn(model, cfg, spec)


def evaluate(model: PathlossModel, cfg: NetworkConfig, method: str, spec: QuadratureSpec | None = None) -> CpStPoint:
    """Coverage and throughput at ``cfg.lam`` for one analytic method."""
    cp = coverage(model, cfg, method, spec)
    return CpStPoint(cfg.lam, cp, st_from_cp(cfg.lam, cp, cfg.tau), method)
