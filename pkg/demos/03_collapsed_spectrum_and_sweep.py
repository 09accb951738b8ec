"""
Collapsed spectrum and the optimal DC field
===========================================

At small field all lines merge into one peak. Its width falls as the field
direction steadies and rises again as the Zeeman comb opens up; the curve
is fitted with A/(B0+b) + C B0.
"""
import numpy as np

from csraman import BeamConfig, FieldConfig, PulseConfig, calibrate_kappa_spectral, measure_fwhm, sweep_b0, synthesize
from csraman.spectrum import default_grid

grid = default_grid(-40, 40, 0.05)
pulse = PulseConfig(1e-3)
field = FieldConfig(B0_magnitude=0.5e-3, theta0=0.01, dB_stray_rms=0.3e-3)
beams = BeamConfig(intensity_rms_fraction=0.027)

# %%
# Calibrate the light-shift scale to 3.5 kHz of extra width
kappa = calibrate_kappa_spectral(beams, 3.5, field, pulse, n_samples=1000, seed=7, grid=grid)
spec = synthesize(field, beams.with_kappa(kappa), pulse, n_samples=1000, seed=7, grid=grid)
print(f"kappa = {kappa:.1f}, collapsed FWHM = {measure_fwhm(spec):.2f} kHz")

# %%
# Sweep the DC field (a coarse list keeps this quick)
sweep_field = FieldConfig(B0_magnitude=0.5e-3, theta0=0.01, dB_stray_rms=0.2e-3)
res = sweep_b0(sweep_field, np.arange(1, 31, 2) / 10, beams.with_kappa(kappa), pulse, n_samples=400, seed=3,
               grid=grid, skip_ambiguous=True)
for B0, w in res.points:
    print(f"B0 = {B0:.1f} mG  FWHM = {w:.2f} kHz")
print(f"fit A={res.fit.A:.3f} b={res.fit.b:.3f} C={res.fit.C:.3f}; minimum at {res.argmin_B0:.2f} mG")
