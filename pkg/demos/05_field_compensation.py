"""
Active field compensation
=========================

Eight three-axis probes at the corners of a cube estimate the field at the
centre; three integrator loops null it. The corner average is exact for any
field linear in position.
"""
import numpy as np

from csraman import FieldEnvironment, ProbeCube, ScenarioEvent, ServoState, corner_average, run_scenario
from csraman.servo import analytic_attenuation, measure_attenuation, reference_environment, random_misalignment

env = FieldEnvironment(dc=(0.1, 0.0, 0.4), gradient=np.diag([1e-3, -5e-4, -5e-4]))
print("corner average:", corner_average(env, ProbeCube()), "(centre field 0.1, 0, 0.4 G)")

# %%
# 50 Hz attenuation of a 500 Hz crossover loop
print(f"50 Hz: measured {measure_attenuation(50.0, 500.0):.4f}, integrator model {float(analytic_attenuation(50.0, 500.0)):.4f}")

# %%
# Probes reset at 20 ms, loops closed at 23 ms, residual from 40 ms on
cube = ProbeCube(pre_reset_offset=(3e-4, -2e-4, 1e-4), misalignment=random_misalignment(np.deg2rad(1), 2))
events = [ScenarioEvent(0.020, "probes-reset"), ScenarioEvent(0.023, "loop-on")]
res = run_scenario(events, 0.1, reference_environment(), cube, ServoState(enabled=False), seed=1, measure_from=0.040)
s = res.summary
print(f"open-loop rms {s['open_rms_G'] * 1e6:.0f} uG, closed-loop rms {s['closed_rms_G'] * 1e6:.0f} uG, ratio {s['ratio']:.3f}")
