"""Truncated Carleman lifting of polynomial systems to bilinear form.

The lifted state is the vector of all distinct monomials of degree 1..N of
the deviation state. Differentiating each monomial with the product rule and
dropping every product of degree above N yields::

    dz/dt = A z + N z u + b u,    y = c . z
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement
from math import comb

import numpy as np

from .errors import DeviationFormError, DimensionError
from .plant_models import InputAffineSystem, Monomial, monomial_key
from .trace import InputSignal, SimulationTrace, rk4


@dataclass(frozen=True)
class MonomialBasis:
    dim: int
    order: int
    entries: tuple[Monomial, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def index(self, m: Monomial) -> int:
        return self.entries.index(m)

    def degrees(self) -> np.ndarray:
        return np.array([sum(m) for m in self.entries])

    def labels(self, names=None) -> list[str]:
        names = names or [f"z{i + 1}" for i in range(self.dim)]
        out = []
        for m in self.entries:
            parts = [n if e == 1 else f"{n}^{e}" for n, e in zip(names, m) if e]
            out.append("*".join(parts))
        return out

    def evaluate(self, z) -> np.ndarray:
        """Lifted vector of monomial values at base state ``z``."""
        z = np.asarray(z, dtype=float)
        return np.prod(z ** np.array(self.entries, dtype=float), axis=1)


def build_basis(dim: int, order: int) -> MonomialBasis:
    """All monomials of degree 1..order in ``dim`` variables.

    Within a degree, square-free monomials come first (so for two states the
    degree-2 block reads ``z1*z2, z1**2, z2**2``).
    """
    if dim < 1 or order < 1:
        raise ValueError("dim and order must be positive")
    entries = []
    for deg in range(1, order + 1):
        for combo in combinations_with_replacement(range(dim), deg):
            exps = [0] * dim
            for i in combo:
                exps[i] += 1
            entries.append(tuple(exps))
    entries.sort(key=monomial_key)
    assert len(entries) == comb(dim + order, order) - 1
    return MonomialBasis(dim, order, tuple(entries))


@dataclass(frozen=True)
class BilinearSystem:
    A: np.ndarray
    N_mat: np.ndarray
    b: np.ndarray
    c: np.ndarray
    basis: MonomialBasis
    y_offset: float = 0.0

    def __post_init__(self):
        n = len(self.basis)
        for name in ("A", "N_mat"):
            if getattr(self, name).shape != (n, n):
                raise DimensionError(f"{name} must be {n}x{n}")
        if self.b.shape != (n,) or self.c.shape != (n,):
            raise DimensionError(f"b and c must have length {n}")

    @property
    def size(self) -> int:
        return len(self.basis)

    def linear_block(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(A11, b1, c1) restricted to the degree-1 monomials."""
        idx = np.flatnonzero(self.basis.degrees() == 1)
        return self.A[np.ix_(idx, idx)], self.b[idx], self.c[idx]

    def rhs(self, z, u: float) -> np.ndarray:
        return self.A @ z + (self.N_mat @ z) * u + self.b * u

    def with_zero_coupling(self) -> "BilinearSystem":
        return BilinearSystem(self.A, np.zeros_like(self.N_mat), self.b, self.c, self.basis, self.y_offset)


def lift(sys: InputAffineSystem, order: int) -> BilinearSystem:
    """Carleman-lift a deviation-form system to a bilinear system of the given order."""
    if order < 1:
        raise ValueError("order must be positive")
    const = sys.f.constant_terms()
    if np.any(const != 0):
        raise DeviationFormError(
            f"system is not in deviation form: drift has constant terms {const.tolist()}"
        )
    basis = build_basis(sys.dim, order)
    pos = {m: k for k, m in enumerate(basis.entries)}
    n = len(basis)
    A = np.zeros((n, n))
    N = np.zeros((n, n))
    b = np.zeros(n)
    for row, m in enumerate(basis.entries):
        for i, e in enumerate(m):
            if e == 0:
                continue
            # d(m)/dt contribution: e * m / z_i * (f_i + g_i u)
            base = tuple(x - (k == i) for k, x in enumerate(m))
            for target, poly in ((A, sys.f.rows[i]), (N, sys.g.rows[i])):
                for a, coef in poly.items():
                    prod = tuple(p + q for p, q in zip(base, a))
                    deg = sum(prod)
                    if deg > order:
                        continue
                    if deg == 0:
                        b[row] += e * coef
                    else:
                        target[row, pos[prod]] += e * coef
    c = np.zeros(n)
    c[[pos[tuple(int(k == j) for k in range(sys.dim))] for j in range(sys.dim)]] = sys.c
    return BilinearSystem(A, N, b, c, basis)


def simulate_bilinear(bsys: BilinearSystem, u: InputSignal, T: float, dt: float) -> SimulationTrace:
    """Integrate the bilinear model from the zero state with fixed-step RK4."""
    t, Z = rk4(lambda t, z: bsys.rhs(z, u(t)), np.zeros(bsys.size), T, dt, label="bilinear model")
    channels = {"t": t, "u": np.array([u(ti) for ti in t]), "y": Z @ bsys.c + bsys.y_offset}
    for k in range(bsys.size):
        channels[f"z{k + 1}"] = Z[:, k]
    return SimulationTrace(dt, channels)


def format_matrix_dump(bsys: BilinearSystem, sig: int = 12) -> str:
    """Plain-text dump: labeled blocks A, N, b, c; matrices row-major."""
    def fmt(v):
        return f"{v:.{sig}g}" if v != 0 else "0"

    n = bsys.size
    lines = ["# basis: " + ", ".join(bsys.basis.labels())]
    for name, M in (("A", bsys.A), ("N", bsys.N_mat)):
        lines.append(f"{name} {n} {n}")
        lines.extend(" ".join(fmt(v) for v in row) for row in M)
    for name, v in (("b", bsys.b), ("c", bsys.c)):
        lines.append(f"{name} {n}")
        lines.append(" ".join(fmt(x) for x in v))
    return "\n".join(lines) + "\n"


def parse_matrix_dump(text: str) -> dict[str, np.ndarray]:
    """Inverse of :func:`format_matrix_dump` (basis comment is ignored)."""
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    out: dict[str, np.ndarray] = {}
    i = 0
    while i < len(rows):
        head = rows[i]
        name, dims = head[0], [int(d) for d in head[1:]]
        if len(dims) == 2:
            out[name] = np.array([[float(x) for x in r] for r in rows[i + 1:i + 1 + dims[0]]])
            i += 1 + dims[0]
        else:
            out[name] = np.array([float(x) for x in rows[i + 1]])
            i += 2
    return out
