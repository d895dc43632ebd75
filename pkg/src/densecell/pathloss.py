"""Multi-slope path-loss model.

A model with ``N`` slopes is the piecewise power law

    l(x) = K_n * x**(-alpha_n)   for R_n <= x < R_{n+1},

with ``R_0 = 0``, ``R_N = inf`` and amplitudes ``K_n`` chosen so that the
gain is continuous at every breakpoint. ``N = 1`` is the single-slope model
``x**(-alpha_0)``, ``N = 2`` the dual-slope model with corner distance ``R_1``.

The argument ``x`` is always the 3-D antenna separation, so breakpoints are
distances between antennas, not ground distances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConstructionError, DomainError

SPEED_OF_LIGHT = 3e8  # m/s


@dataclass(frozen=True)
class PathlossModel:
    """Immutable multi-slope path-loss model.

    Use :func:`make_mspm`, :func:`sspm` or :func:`dspm` rather than calling
    the constructor with hand-computed amplitudes.

    Attributes:
        exponents: Path-loss exponents ``alpha_0 <= ... <= alpha_{N-1}``.
        breakpoints: Segment boundaries ``R_1 < ... < R_{N-1}`` in meters.
        log_amplitudes: ``ln K_n`` for each segment, ``ln K_0 = 0``.
    """

    exponents: tuple[float, ...]
    breakpoints: tuple[float, ...]
    log_amplitudes: tuple[float, ...] = field(repr=False)

    @property
    def n_slopes(self) -> int:
        return len(self.exponents)

    @property
    def amplitudes(self) -> tuple[float, ...]:
        return tuple(math.exp(v) for v in self.log_amplitudes)

    @property
    def last_exponent(self) -> float:
        return self.exponents[-1]

    @property
    def last_breakpoint(self) -> float:
        """``R_{N-1}``; zero for a single-slope model."""
        return self.breakpoints[-1] if self.breakpoints else 0.0

    @property
    def edges(self) -> tuple[float, ...]:
        """``(R_0, R_1, ..., R_{N-1}, R_N)`` with ``R_0 = 0`` and ``R_N = inf``."""
        return (0.0, *self.breakpoints, math.inf)

    def segment(self, x: float) -> int:
        """Index ``n`` with ``R_n <= x < R_{n+1}``."""
        return int(np.searchsorted(self.breakpoints, x, side="right"))

    def gain(self, x):
        return gain(self, x)


def make_mspm(exponents, breakpoints=()) -> PathlossModel:
    """Build a multi-slope model and its continuity amplitudes.

    Raises:
        ConstructionError: on a length mismatch, non-increasing breakpoints,
            decreasing exponents, a negative exponent, or a last exponent
            not above 2.
    """
    alphas = tuple(float(a) for a in exponents)
    radii = tuple(float(r) for r in breakpoints)
    if len(alphas) == 0:
        raise ConstructionError("at least one exponent is required")
    if len(alphas) != len(radii) + 1:
        raise ConstructionError(
            f"need len(exponents) == len(breakpoints) + 1, got {len(alphas)} and {len(radii)}"
        )
    if any(not math.isfinite(r) or r <= 0 for r in radii):
        raise ConstructionError(f"breakpoints must be finite and positive, got {radii}")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ConstructionError(f"breakpoints must be strictly increasing, got {radii}")
    if alphas[0] < 0:
        raise ConstructionError(f"exponents must be non-negative, got {alphas}")
    if any(b < a for a, b in zip(alphas, alphas[1:])):
        raise ConstructionError(f"exponents must be non-decreasing, got {alphas}")
    if not alphas[-1] > 2:
        raise ConstructionError(f"last exponent must exceed 2, got {alphas[-1]}")

    logs = [0.0]
    for n, r in enumerate(radii, start=1):
        logs.append(logs[-1] + (alphas[n] - alphas[n - 1]) * math.log(r))
    return PathlossModel(alphas, radii, tuple(logs))


def sspm(alpha0: float) -> PathlossModel:
    """Single-slope model ``x**(-alpha0)``."""
    return make_mspm([alpha0])


def dspm(alpha0: float, alpha1: float, r1: float) -> PathlossModel:
    """Dual-slope model with corner distance ``r1``."""
    return make_mspm([alpha0, alpha1], [r1])


def gain(model: PathlossModel, x):
    """Path-loss gain ``K_n x**(-alpha_n)`` at distance ``x`` (scalar or array).

    Raises:
        DomainError: for ``x <= 0``.
    """
    xs = np.asarray(x, dtype=float)
    if np.any(~(xs > 0)):
        raise DomainError("path-loss distance must be positive")
    idx = np.searchsorted(model.breakpoints, xs, side="right")
    alphas = np.asarray(model.exponents)[idx]
    logk = np.asarray(model.log_amplitudes)[idx]
    out = np.exp(logk - alphas * np.log(xs))
    return float(out) if out.ndim == 0 else out


def corner_distance(h_t: float, h_r: float, f_c: float) -> float:
    """Two-ray corner distance ``4 h_t h_r f_c / c`` in meters."""
    if h_t < 0 or h_r < 0:
        raise DomainError("antenna heights must be non-negative")
    if not f_c > 0:
        raise DomainError("carrier frequency must be positive")
    return 4.0 * h_t * h_r * f_c / SPEED_OF_LIGHT
