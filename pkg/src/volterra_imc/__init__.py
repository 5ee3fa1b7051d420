"""Carleman/Volterra modelling and IMC-Volterra control of polynomial plants."""

__version__ = "0.1.0"

from .carleman import BilinearSystem, MonomialBasis, build_basis, lift, simulate_bilinear
from .errors import *  # noqa: F401,F403
from .imc import (
    IMCFilter,
    VolterraIMCController,
    build_controller,
    closed_loop_step,
    factor_allpass,
    isci,
    linear_controller,
)
from .plant_models import (
    InputAffineSystem,
    OperatingPoint,
    PolynomialVectorField,
    find_equilibrium,
    shift_to_deviation,
    van_de_vusse,
)
from .rational import RationalFunction
from .realization import build_cascade, expand_kernel, factor_separable, partial_fractions, simulate_volterra
from .simulate import ScenarioConfig, closed_loop_compare, open_loop_compare, steady_state
from .trace import SimulationTrace, pulse, step
from .volterra_freq import dc_gain, eval_kernel, h1_rational
