"""
From a polynomial reactor model to a bilinear system
====================================================

The van de Vusse CSTR has quadratic kinetics. Shifting it to deviation
variables and lifting with all monomials up to degree two gives a bilinear
model whose linear block carries the first-order kernel.
"""

import numpy as np

from volterra_imc import dc_gain, h1_rational, lift, shift_to_deviation, van_de_vusse
from volterra_imc.carleman import format_matrix_dump

sys, op = van_de_vusse()
print("operating point:", op.x0, "input", op.u0)

# the nominal point is only approximately an equilibrium; its residual is dropped
dev = shift_to_deviation(sys, op)
bsys = lift(dev, order=2)
print(format_matrix_dump(bsys))

# first-order kernel in closed form
h1 = h1_rational(bsys)
print("H1(s) =", h1.format(sig=8))
print("poles:", np.round(h1.poles(), 4), "zero:", np.round(h1.zeros(), 4))

# steady-state gains of the first three kernels
for k in (1, 2, 3):
    print(f"H{k} at the origin = {dc_gain(bsys, k):.6e}")
