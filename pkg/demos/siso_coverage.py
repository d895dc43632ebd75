"""Single-antenna coverage as the network densifies.

With a single-slope path loss and BSs at the height of the users, coverage
does not depend on density at all. Lifting the BSs a couple of meters above
the users breaks that invariance: past some density, coverage collapses.
A dual-slope model collapses sooner, because close-in interferers see the
gentler near-field exponent.
"""

import numpy as np

from densecell import NetworkConfig, cp_siso, cp_siso_lower_bound, cp_siso_upper_bound, dspm, sspm

single = sspm(4.0)
dual = dspm(2.5, 4.0, 10.0)

lams_km2 = np.geomspace(1e1, 1e6, 11)
print(f"{'BS/km^2':>10} {'SSPM dh=0':>10} {'SSPM dh=2':>10} {'DSPM dh=2':>10}  DSPM bounds")
for lam_km2 in lams_km2:
    lam = lam_km2 * 1e-6
    flat = NetworkConfig(lam=lam, delta_h=0.0, tau=10.0)
    raised = flat.with_(delta_h=2.0)
    lo, hi = cp_siso_lower_bound(dual, raised), cp_siso_upper_bound(dual, raised)
    print(
        f"{lam_km2:10.3g} {cp_siso(single, flat):10.4f} {cp_siso(single, raised):10.4f} "
        f"{cp_siso(dual, raised):10.4f}  [{lo:.3g}, {hi:.3g}]"
    )

# The flat single-slope column is 1 / (1 + sqrt(10) arctan(sqrt(10))) ~ 0.2001.
