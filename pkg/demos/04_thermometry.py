"""
Velocity-selective spectrum and temperature
===========================================

Counter-propagating beams make the transition Doppler sensitive. The
spectrum width converts to a temperature, but a short pulse adds its own
width; fitting the full forward model removes it.
"""
from csraman import PulseConfig, VelocityDistribution, fit_temperature, measure_fwhm, temperature_from_fwhm, velocity_spectrum
from csraman.velocity import fwhm_from_temperature

cloud = VelocityDistribution(3.3)
print(f"Doppler FWHM at 3.3 uK: {fwhm_from_temperature(3.3):.1f} kHz")

for T_pulse in (20e-6, 190e-6):
    pulse = PulseConfig(T_pulse)
    spec = velocity_spectrum(cloud, pulse)
    w = measure_fwhm(spec)
    fit = fit_temperature(spec, pulse)
    print(f"{T_pulse * 1e6:.0f} us pulse: FWHM {w:.1f} kHz, plain T {temperature_from_fwhm(w):.2f} uK, "
          f"fitted T {fit['temperature_uK']:.2f} uK")
