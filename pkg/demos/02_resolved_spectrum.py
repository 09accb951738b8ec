"""
Resolved Zeeman spectrum at 28 mG
=================================

A tilted DC field makes the Delta m = +-1 lines appear between the allowed
even lines. The comb fit gives each line center without the bias a plain
argmax suffers from neighbouring tails.
"""
import numpy as np

from csraman import BeamConfig, FieldConfig, PulseConfig, synthesize
from csraman.analysis import fit_line_comb

field = FieldConfig(B0_magnitude=0.028, theta0=0.2, dB_stray_rms=0.5e-3)
pulse = PulseConfig(500e-6)
labels = np.arange(-7, 8)

for kappa in (0.0, 5510.8):
    beams = BeamConfig(intensity_rms_fraction=0.025, lightshift_scale_kappa=kappa)
    spec = synthesize(field, beams, pulse, n_samples=1000, seed=4)
    comb = fit_line_comb(spec, 9.8 * labels, pulse)
    print(f"kappa = {kappa:g}")
    print("  spacings (kHz):", np.round(comb.spacings, 2))
    print("  heights       :", np.round(comb.heights, 3))

# %%
# With light shifts at the scale that broadens the collapsed spectrum by
# 3.5 kHz, the sublevel-dependent part of the shift at 0.2 rad distorts the
# comb by several kHz.
