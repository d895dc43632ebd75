"""Checking the analytic coverage against a simulated network.

Each trial drops a Poisson field of BSs around the user, serves it from the
nearest one, draws chi-square gains and compares the SIR with the threshold.
Seeds are derived per trial, so the estimate does not depend on the number
of worker threads.
"""

from densecell import FadingSpec, NetworkConfig, SimSpec, cp_miso_exact, dspm, estimate_cp

model = dspm(2.5, 4.0, 10.0)
sim = SimSpec(trials=5000, seed=7)

for lam_km2 in (10, 100, 1000, 10000):
    for na in (1, 4, 16):
        cfg = NetworkConfig(lam=lam_km2 * 1e-6, delta_h=2.0, tau=10.0, n_antennas=na)
        est = estimate_cp(model, cfg, FadingSpec("beamforming"), sim, workers=4)
        exact = cp_miso_exact(model, cfg)
        print(f"{lam_km2:6d} BS/km^2 Na={na:2d}  analytic {exact:.4f}  simulated {est.mean:.4f} +- {est.ci_halfwidth:.4f}")

# Rice gains are used as drawn (mean dof + nc = 13), so absolute levels differ
# from Rayleigh while the decay with density is the same.
rice = FadingSpec("rice", rice_noncentrality=1.0, rice_dof=12)
for lam_km2 in (3e2, 1e3, 3e3):
    est = estimate_cp(model, NetworkConfig(lam=lam_km2 * 1e-6, delta_h=2.0, tau=10.0), rice, sim, workers=4)
    print(f"rice {lam_km2:8.0f} BS/km^2  CP {est.mean:.4f}")
