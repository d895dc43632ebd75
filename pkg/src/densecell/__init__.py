"""Coverage, throughput and critical density of dense small-cell networks.

Base stations form a Poisson point process, users attach to the nearest
one, links follow a multi-slope path-loss law over the 3-D distance and the
serving BS may beamform to its user with several antennas.
"""

from .analytic import (
    CpStPoint,
    NetworkConfig,
    coverage,
    cp_miso_approx,
    cp_miso_exact,
    cp_siso,
    cp_siso_lower_bound,
    cp_siso_upper_bound,
    eta_derivatives,
    evaluate,
    st_from_cp,
)
from .density import (
    CriticalDensityResult,
    critical_density_dspm,
    critical_density_numeric,
    critical_density_sspm,
    feasibility,
)
from .errors import (
    AccuracyError,
    ConstructionError,
    DensecellError,
    DomainError,
    NumericalInstabilityError,
    ShapeError,
)
from .montecarlo import CpEstimate, FadingSpec, SimSpec, estimate_cp, estimate_st, simulate_trial
from .pathloss import PathlossModel, corner_distance, dspm, gain, make_mspm, sspm
from .specfun import QuadratureSpec, delta, omega1, omega2

__version__ = "0.1.0"
