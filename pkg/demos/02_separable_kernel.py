"""
Factoring a second-order kernel denominator
===========================================

A kernel denominator Q2(s1, s2) that factors as Fa(s1) Fb(s2) Fc(s1 + s2)
can be found from three one-dimensional slices. Once factored, the kernel
splits into a constant plus a remainder over the factors.
"""

from volterra_imc.realization import BivariatePolynomial, expand_kernel, factorization_report

P2 = BivariatePolynomial({(2, 1): 1, (2, 0): 4, (1, 1): 12, (1, 2): 1, (0, 2): 2, (1, 0): 12, (0, 0): 48})
Q2 = BivariatePolynomial({(2, 1): 1, (2, 0): 4, (1, 1): 12, (1, 2): 1, (0, 2): 2, (1, 0): 32, (0, 1): 20,
                          (0, 0): 48})

print("Q2(0, s)  coefficients:", Q2.slice_s1_zero())
print("Q2(s, 0)  coefficients:", Q2.slice_s2_zero())
print("Q2(s, -s) coefficients:", Q2.slice_antidiagonal())

exp = expand_kernel(P2, Q2)
print(factorization_report(exp.factorization, sig=8))
print("constant part:", exp.constant)
print("remainder as a polynomial in (s1 + s2):", exp.sum_coefficients())

# spot check at an arbitrary point
s1, s2 = 0.4 + 1j, -0.3
print("direct:", P2(s1, s2) / Q2(s1, s2), "expanded:", exp(s1, s2))
