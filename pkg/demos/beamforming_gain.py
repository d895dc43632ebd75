"""How much does single-user beamforming buy?

The exact coverage sums Laplace-transform derivatives of the interference;
the cheap approximation replaces the chi-square desired gain with an
exponential of the same mean, which amounts to dividing the threshold by
the number of antennas. The approximation is pessimistic, most visibly
at low density.
"""

from densecell import NetworkConfig, cp_miso_approx, cp_miso_exact, sspm
from densecell.density import throughput_peak

model = sspm(4.0)
base = NetworkConfig(lam=1e-6, delta_h=2.0, tau=10.0)

print("low-density coverage ceiling, tau = 10 dB")
for na in (1, 2, 4, 8, 16):
    cfg = base.with_(n_antennas=na)
    print(f"  Na={na:2d}  exact {cp_miso_exact(model, cfg):.4f}  approx {cp_miso_approx(model, cfg):.4f}")

print("\nthroughput peak over density (bits/s/Hz/km^2)")
peaks = {}
for na in (1, 16):
    lam, st = throughput_peak(model, base.with_(n_antennas=na), "miso_exact", lo=1e-5, hi=1e1)
    peaks[na] = st
    print(f"  Na={na:2d}  peak at {lam * 1e6:10.1f} BS/km^2, ST {st * 1e6:10.1f}")
print(f"  gain from 16 antennas: {peaks[16] / peaks[1]:.1f}x")
