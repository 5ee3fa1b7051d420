"""Polynomial input-affine systems and the van de Vusse reactor benchmark.

A system has the form ``dx/dt = f(x) + g(x) u`` with scalar input ``u`` and
linear scalar output ``y = c . x``. Each component of ``f`` and ``g`` is a
sparse polynomial stored as a mapping from an exponent tuple (one entry per
state) to a real coefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import Mapping, Sequence

import numpy as np

from .errors import ConvergenceError, DimensionError, NotAnEquilibriumError

Monomial = tuple[int, ...]
Polynomial = dict[Monomial, float]


def monomial_key(exps: Monomial):
    """Ordering key: by degree, then square-free monomials before powers,
    then descending lexicographic exponents.

    For two states and degree 2 this gives ``z1*z2, z1**2, z2**2``.
    """
    return (sum(exps), max(exps, default=0), tuple(-e for e in exps))


def _clean(poly: Mapping[Monomial, float]) -> Polynomial:
    return {m: float(c) for m, c in sorted(poly.items(), key=lambda kv: monomial_key(kv[0])) if c != 0.0}


def poly_add(p: Mapping[Monomial, float], q: Mapping[Monomial, float], scale: float = 1.0) -> Polynomial:
    out = dict(p)
    for m, c in q.items():
        out[m] = out.get(m, 0.0) + scale * c
    return _clean(out)


def poly_mul(p: Mapping[Monomial, float], q: Mapping[Monomial, float]) -> Polynomial:
    out: dict[Monomial, float] = {}
    for (m1, c1), (m2, c2) in product(p.items(), q.items()):
        m = tuple(a + b for a, b in zip(m1, m2))
        out[m] = out.get(m, 0.0) + c1 * c2
    return _clean(out)


def poly_recenter(p: Mapping[Monomial, float], shift: Sequence[float]) -> Polynomial:
    """Return q with q(z) = p(z + shift), by binomial expansion."""
    out: dict[Monomial, float] = {}
    for exps, coef in p.items():
        # each factor (z_i + s_i)**a_i = sum_j C(a_i, j) z_i**j s_i**(a_i - j)
        per_var = [
            [(j, math.comb(a, j) * float(s) ** (a - j)) for j in range(a + 1)]
            for a, s in zip(exps, shift)
        ]
        for choice in product(*per_var):
            m = tuple(j for j, _ in choice)
            w = coef
            for _, f in choice:
                w *= f
            out[m] = out.get(m, 0.0) + w
    return _clean(out)


def poly_degree(p: Mapping[Monomial, float]) -> int:
    return max((sum(m) for m in p), default=0)


@dataclass(frozen=True)
class PolynomialVectorField:
    """Map R^n -> R^n whose components are sparse polynomials."""

    dim: int
    rows: tuple[Polynomial, ...]
    _exps: np.ndarray = field(init=False, repr=False, compare=False)
    _coefs: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.dim < 1:
            raise DimensionError("dim must be positive")
        if len(self.rows) != self.dim:
            raise DimensionError(f"expected {self.dim} rows, got {len(self.rows)}")
        rows = []
        for row in self.rows:
            for m, c in row.items():
                if len(m) != self.dim:
                    raise DimensionError(f"monomial {m} does not have length {self.dim}")
                if any(e < 0 for e in m):
                    raise DimensionError(f"negative exponent in {m}")
                if not math.isfinite(c):
                    raise ValueError(f"non-finite coefficient for {m}")
            rows.append(_clean({tuple(int(e) for e in m): c for m, c in row.items()}))
        object.__setattr__(self, "rows", tuple(rows))
        # dense monomial table for fast evaluation
        monos = sorted({m for row in rows for m in row}, key=monomial_key)
        exps = np.array(monos, dtype=float).reshape(len(monos), self.dim)
        coefs = np.zeros((self.dim, len(monos)))
        index = {m: k for k, m in enumerate(monos)}
        for i, row in enumerate(rows):
            for m, c in row.items():
                coefs[i, index[m]] = c
        object.__setattr__(self, "_exps", exps)
        object.__setattr__(self, "_coefs", coefs)

    @classmethod
    def from_dicts(cls, rows: Sequence[Mapping[Monomial, float]]) -> "PolynomialVectorField":
        return cls(len(rows), tuple(dict(r) for r in rows))

    @classmethod
    def linear(cls, matrix, offset=None) -> "PolynomialVectorField":
        """Affine field ``matrix @ x + offset``."""
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        n = matrix.shape[0]
        rows = []
        for i in range(n):
            row = {}
            if offset is not None and offset[i] != 0:
                row[(0,) * n] = float(offset[i])
            for j in range(n):
                if matrix[i, j] != 0:
                    row[tuple(int(k == j) for k in range(n))] = float(matrix[i, j])
            rows.append(row)
        return cls(n, tuple(rows))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionError(f"state must have shape ({self.dim},), got {x.shape}")
        if self._exps.shape[0] == 0:
            return np.zeros(self.dim)
        values = np.prod(x ** self._exps, axis=1)
        return self._coefs @ values

    def jacobian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        jac = np.zeros((self.dim, self.dim))
        for i, row in enumerate(self.rows):
            for m, c in row.items():
                for j, e in enumerate(m):
                    if e == 0:
                        continue
                    term = c * e
                    for k, ek in enumerate(m):
                        term *= x[k] ** (ek - 1 if k == j else ek)
                    jac[i, j] += term
        return jac

    def degree(self) -> int:
        return max(poly_degree(r) for r in self.rows)

    def constant_terms(self) -> np.ndarray:
        zero = (0,) * self.dim
        return np.array([r.get(zero, 0.0) for r in self.rows])

    def recenter(self, shift) -> "PolynomialVectorField":
        return PolynomialVectorField(self.dim, tuple(poly_recenter(r, shift) for r in self.rows))


@dataclass(frozen=True)
class InputAffineSystem:
    """``dx/dt = f(x) + g(x) u``, ``y = c . x``."""

    f: PolynomialVectorField
    g: PolynomialVectorField
    c: tuple[float, ...]
    state_names: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "c", tuple(float(v) for v in self.c))
        if not (self.f.dim == self.g.dim == len(self.c)):
            raise DimensionError("f, g and c must share the state dimension")
        if self.state_names is None:
            object.__setattr__(self, "state_names", tuple(f"x{i + 1}" for i in range(self.dim)))
        elif len(self.state_names) != self.dim:
            raise DimensionError("one state name per state is required")

    @property
    def dim(self) -> int:
        return self.f.dim

    def output(self, x) -> float:
        return float(np.dot(self.c, x))

    @classmethod
    def linear(cls, A, b, c) -> "InputAffineSystem":
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float).ravel()
        n = A.shape[0]
        return cls(
            PolynomialVectorField.linear(A),
            PolynomialVectorField.linear(np.zeros((n, n)), b),
            tuple(np.asarray(c, dtype=float).ravel()),
        )


@dataclass(frozen=True)
class OperatingPoint:
    x0: tuple[float, ...]
    u0: float
    residual_tolerance: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "x0", tuple(float(v) for v in self.x0))
        if not self.residual_tolerance > 0:
            raise ValueError("residual_tolerance must be positive")


def eval_derivative(sys: InputAffineSystem, x, u: float) -> np.ndarray:
    """Right-hand side ``f(x) + g(x) u``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (sys.dim,):
        raise DimensionError(f"state must have length {sys.dim}")
    if not (np.all(np.isfinite(x)) and math.isfinite(u)):
        raise ValueError("state and input must be finite")
    return sys.f(x) + sys.g(x) * u


def shift_to_deviation(sys: InputAffineSystem, op: OperatingPoint, keep_constant: bool = False) -> InputAffineSystem:
    """Rewrite ``sys`` in ``z = x - x0`` and ``du = u - u0``.

    Drift constants left over (the equilibrium residual) are dropped when all
    of them are below ``op.residual_tolerance``; otherwise
    :class:`NotAnEquilibriumError` is raised. ``keep_constant=True`` keeps them
    instead and skips the check.
    """
    if len(op.x0) != sys.dim:
        raise DimensionError("operating point dimension does not match the system")
    g_new = sys.g.recenter(op.x0)
    f_rows = [poly_add(fr, gr, scale=op.u0) for fr, gr in zip(sys.f.recenter(op.x0).rows, g_new.rows)]
    if not keep_constant:
        zero = (0,) * sys.dim
        residuals = [row.get(zero, 0.0) for row in f_rows]
        if any(abs(r) >= op.residual_tolerance for r in residuals):
            raise NotAnEquilibriumError(residuals, op.residual_tolerance)
        for row in f_rows:
            row.pop(zero, None)
    return InputAffineSystem(PolynomialVectorField(sys.dim, tuple(f_rows)), g_new, sys.c, sys.state_names)


def van_de_vusse(
    k1: float = 50.0,
    k2: float = 100.0,
    k3: float = 10.0,
    c_af: float = 10.0,
) -> tuple[InputAffineSystem, OperatingPoint]:
    """Isothermal van de Vusse CSTR with dilution rate F/V as input.

    States are the concentrations of A and B (mol/l), time is in hours and
    the measured output is the concentration of B.
    """
    f = PolynomialVectorField(2, (
        {(1, 0): -k1, (2, 0): -k3},
        {(1, 0): k1, (0, 1): -k2},
    ))
    g = PolynomialVectorField(2, (
        {(0, 0): c_af, (1, 0): -1.0},
        {(0, 1): -1.0},
    ))
    sys = InputAffineSystem(f, g, (0.0, 1.0), ("C_A", "C_B"))
    return sys, OperatingPoint((3.0, 1.12), 34.3, 0.5)


def find_equilibrium(
    sys: InputAffineSystem,
    u_const: float,
    guess,
    tol: float = 1e-10,
    max_iter: int = 100,
) -> np.ndarray:
    """Solve ``f(x) + g(x) u_const = 0`` by damped Newton iteration."""
    if not math.isfinite(u_const):
        raise ValueError("u_const must be finite")
    x = np.array(guess, dtype=float)
    if x.shape != (sys.dim,) or not np.all(np.isfinite(x)):
        raise DimensionError(f"guess must be a finite vector of length {sys.dim}")

    def residual(v):
        return sys.f(v) + sys.g(v) * u_const

    r = residual(x)
    for _ in range(max_iter):
        norm = np.linalg.norm(r)
        if norm < tol:
            return x
        jac = sys.f.jacobian(x) + sys.g.jacobian(x) * u_const
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            raise ConvergenceError("singular Jacobian in Newton iteration", norm) from None
        alpha = 1.0
        while alpha > 1e-8:
            x_try = x + alpha * step
            r_try = residual(x_try)
            if np.linalg.norm(r_try) < (1 - 1e-4 * alpha) * norm:
                break
            alpha *= 0.5
        x, r = x_try, r_try
    norm = np.linalg.norm(r)
    if norm < tol:
        return x
    raise ConvergenceError(f"Newton iteration did not converge in {max_iter} steps", norm)
