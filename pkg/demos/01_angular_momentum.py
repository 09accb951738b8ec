"""
Angular-momentum building blocks
================================

Exact 3j and 6j symbols, and the Raman selection rules they imply for the
cesium clock transition F=3 -> F=4.
"""
import numpy as np

from csraman import ZeemanSublevel, raman_amplitude, wigner3j, wigner6j
from csraman.angular import wigner3j_exact
from csraman.geometry import decompose_polarization

# A 3j symbol and its exact square (sign, value^2) as fractions
print("(1 1 0; 1 -1 0) =", wigner3j(1, 1, 0, 1, -1, 0))
print("exact form:", wigner3j_exact(1, 1, 0, 1, -1, 0))
print("{1/2 3/2 1; 4 3 7/2} =", wigner6j(0.5, 1.5, 1, 4, 3, 3.5))

# %%
# With the field along the beams only even Delta m lines survive
for theta in (0.0, 0.2):
    e1, e2 = decompose_polarization(theta, 0.0, 1), decompose_polarization(theta, 0.0, 2)
    amps = {dm: abs(raman_amplitude(ZeemanSublevel(3, 0), ZeemanSublevel(4, dm), e1, e2)) for dm in range(-3, 4)}
    print(f"theta = {theta}: " + "  ".join(f"dm={dm:+d}: {a:.3e}" for dm, a in amps.items()))
