"""Simulation toolkit for stimulated Raman spectroscopy of cold cesium.

Modules
-------
angular   exact Wigner 3j and 6j symbols
atom      cesium constants, Zeeman sublevels and line positions
geometry  field and beam-intensity sampling, polarization decomposition
raman     light shifts, two-photon amplitudes and line tables
spectrum  Monte-Carlo synthesis of copropagating spectra
analysis  FWHM measurement, width-curve and Gaussian fits, B0 sweeps
velocity  counter-propagating spectra and thermometry
servo     eight-probe field-compensation loop
config    scenario files
cli       command-line entry point
"""
from .analysis import (AmbiguousPeakError, FitError, FitParams, calibrate_kappa_spectral, fit_curve, fit_line_comb,
                       fit_gaussian, fit_width_curve, measure_fwhm, sweep_b0)
from .angular import HalfInt, wigner3j, wigner6j
from .atom import CESIUM, AtomModel, SelectionRuleError, ZeemanSublevel, line_position, zeeman_shift
from .geometry import FieldConfig, FieldSample, decompose_polarization, sample_field, sample_fields
from .raman import (BeamConfig, LineTable, build_line_table, light_shift, light_shift_table,
                    raman_amplitude, raman_amplitude_reduced)
from .servo import (FieldEnvironment, ProbeCube, ScenarioEvent, ServoState, UnstableLoopError,
                    corner_average, run_scenario, step_loop)
from .spectrum import PulseConfig, Spectrum, calibrate_kappa, pulse_lineshape, synthesize
from .velocity import VelocityDistribution, fit_temperature, temperature_from_fwhm, velocity_spectrum

__version__ = "0.1.0"
