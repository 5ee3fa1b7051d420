"""
Open-loop steps: Volterra models against the nonlinear plant
============================================================

Steps of +20 and -20 in the dilution rate are applied to the nonlinear
reactor and to cascade realizations of the first three Volterra orders.
The comparison table lists steady deviations, percent differences and the
integrated absolute error of each model trajectory.
"""

import warnings

from volterra_imc.simulate import ScenarioConfig, format_comparison, open_loop_compare

warnings.simplefilter("ignore", RuntimeWarning)

for amplitude in (20.0, -20.0):
    rows = open_loop_compare(ScenarioConfig(step_amplitude=amplitude))
    print(f"step {amplitude:+g} 1/h")
    print(format_comparison(rows))
