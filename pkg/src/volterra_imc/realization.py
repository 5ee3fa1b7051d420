"""Time-domain realization of Volterra models.

Two routes are provided:

* the separable-denominator route for a symbolic second-order kernel
  ``P2(s1, s2) / Q2(s1, s2)`` with ``Q2 = Fa(s1) Fb(s2) Fc(s1 + s2)``,
  followed by partial fractions of the univariate factors;
* the numerical cascade of linear blocks obtained from a bilinear model, in
  which stage k is driven by the input times the state of stage k-1 and
  produces the order-k homogeneous output.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb

import numpy as np
from numpy.polynomial import polynomial as P

from .carleman import BilinearSystem
from .errors import AmbiguityError, NotSeparableError, NumericFailure
from .rational import RationalFunction, poly_from_roots, poly_roots, trim
from .trace import InputSignal, SimulationTrace, rk4

ROOT_TOL = 1e-8


# -- bivariate polynomials ---------------------------------------------------

@dataclass(frozen=True)
class BivariatePolynomial:
    """Sparse polynomial in (s1, s2); keys are (degree in s1, degree in s2)."""

    coefficients: dict[tuple[int, int], float]

    def __post_init__(self):
        clean = {
            (int(i), int(j)): float(c)
            for (i, j), c in sorted(self.coefficients.items(), key=lambda kv: (sum(kv[0]), -kv[0][0]))
            if c != 0
        }
        object.__setattr__(self, "coefficients", clean)

    @classmethod
    def from_factors(cls, fa, fb, fc, scale: float = 1.0) -> "BivariatePolynomial":
        """Expand ``scale * fa(s1) * fb(s2) * fc(s1 + s2)`` (ascending coefficient inputs)."""
        out: dict[tuple[int, int], float] = {}
        # fc(s1 + s2) = sum_k fc_k sum_m C(k, m) s1^m s2^(k-m)
        fc_terms = {}
        for k, ck in enumerate(np.atleast_1d(fc)):
            for m in range(k + 1):
                fc_terms[(m, k - m)] = fc_terms.get((m, k - m), 0.0) + ck * comb(k, m)
        for i, a in enumerate(np.atleast_1d(fa)):
            for j, b in enumerate(np.atleast_1d(fb)):
                for (m, n), c in fc_terms.items():
                    key = (i + m, j + n)
                    out[key] = out.get(key, 0.0) + scale * a * b * c
        return cls(out)

    def __call__(self, s1, s2):
        return sum(c * s1**i * s2**j for (i, j), c in self.coefficients.items())

    def __sub__(self, other: "BivariatePolynomial") -> "BivariatePolynomial":
        out = dict(self.coefficients)
        for k, c in other.coefficients.items():
            out[k] = out.get(k, 0.0) - c
        return BivariatePolynomial(out)

    def scaled(self, k: float) -> "BivariatePolynomial":
        return BivariatePolynomial({m: k * c for m, c in self.coefficients.items()})

    @property
    def total_degree(self) -> int:
        return max((i + j for i, j in self.coefficients), default=-1)

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(c) <= tol for c in self.coefficients.values())

    def max_abs(self) -> float:
        return max((abs(c) for c in self.coefficients.values()), default=0.0)

    def top_part(self) -> "BivariatePolynomial":
        d = self.total_degree
        return BivariatePolynomial({m: c for m, c in self.coefficients.items() if sum(m) == d})

    def slice_s2_zero(self) -> np.ndarray:
        """Ascending coefficients of Q(s, 0)."""
        return self._slice(lambda i, j: (i, 1.0) if j == 0 else None)

    def slice_s1_zero(self) -> np.ndarray:
        """Ascending coefficients of Q(0, s)."""
        return self._slice(lambda i, j: (j, 1.0) if i == 0 else None)

    def slice_antidiagonal(self) -> np.ndarray:
        """Ascending coefficients of Q(s, -s)."""
        return self._slice(lambda i, j: (i + j, (-1.0) ** j))

    def _slice(self, rule) -> np.ndarray:
        out = np.zeros(self.total_degree + 1 if self.coefficients else 1)
        for (i, j), c in self.coefficients.items():
            hit = rule(i, j)
            if hit is not None:
                out[hit[0]] += hit[1] * c
        return trim(out)

    def as_function_of_sum(self, tol: float = 1e-12):
        """Coefficients r_k with ``self(s1, s2) = sum_k r_k (s1 + s2)**k``, or None."""
        r = self.slice_s2_zero()
        rebuilt = BivariatePolynomial.from_factors([1.0], [1.0], r)
        if (self - rebuilt).is_zero(tol * max(1.0, self.max_abs())):
            return r
        return None


# -- separable factorization -------------------------------------------------

@dataclass(frozen=True)
class SeparableFactorization:
    """``Q2(s1, s2) = scale * Fa(s1) * Fb(s2) * Fc(s1 + s2)`` with monic factors."""

    Fa: np.ndarray
    Fb: np.ndarray
    Fc: np.ndarray
    scale: float

    def roots(self) -> dict[str, np.ndarray]:
        return {"Fa": poly_roots(self.Fa), "Fb": poly_roots(self.Fb), "Fc": poly_roots(self.Fc)}

    def expand(self) -> BivariatePolynomial:
        return BivariatePolynomial.from_factors(self.Fa, self.Fb, self.Fc, self.scale)

    def __call__(self, s1, s2):
        return self.scale * P.polyval(s1, self.Fa) * P.polyval(s2, self.Fb) * P.polyval(s1 + s2, self.Fc)


def _multiset_take(pool: list[complex], roots, tol=ROOT_TOL):
    """Remove ``roots`` from ``pool`` (approximate matching); None if impossible."""
    pool = list(pool)
    for r in roots:
        k = next((i for i, p in enumerate(pool) if abs(p - r) <= tol * max(1.0, abs(r))), None)
        if k is None:
            return None
        pool.pop(k)
    return pool


def _multiset_common(a, b, tol=ROOT_TOL) -> list[complex]:
    common, rest = [], list(b)
    for r in a:
        k = next((i for i, p in enumerate(rest) if abs(p - r) <= tol * max(1.0, abs(r))), None)
        if k is not None:
            common.append(r)
            rest.pop(k)
    return common


def _real_monic(roots) -> np.ndarray:
    return poly_from_roots(roots) if len(roots) else np.array([1.0])


def factor_separable(Q2: BivariatePolynomial, tol: float = 1e-9) -> SeparableFactorization:
    """Recover ``Fa, Fb, Fc`` from the three slices ``Q2(s,0)``, ``Q2(0,s)``, ``Q2(s,-s)``.

    Roots common to both axis slices are attributed to ``Fc`` first; smaller
    attributions are tried only when the expanded product fails to reproduce
    ``Q2``.
    """
    if Q2.is_zero():
        raise NotSeparableError("Q2 is identically zero")
    slices = {
        "Q2(s, 0)": Q2.slice_s2_zero(),
        "Q2(0, s)": Q2.slice_s1_zero(),
        "Q2(s, -s)": Q2.slice_antidiagonal(),
    }
    for name, sl in slices.items():
        if np.all(sl == 0):
            raise NotSeparableError(f"slice {name} vanishes identically")
    r_s1 = list(poly_roots(slices["Q2(s, 0)"]))   # roots of Fa and Fc
    r_s2 = list(poly_roots(slices["Q2(0, s)"]))   # roots of Fb and Fc
    common = _multiset_common(r_s1, r_s2)

    found: list[SeparableFactorization] = []
    for size in range(len(common), -1, -1):
        for subset in sorted(set(itertools.combinations(range(len(common)), size))):
            fc_roots = [common[i] for i in subset]
            fa_roots = _multiset_take(r_s1, fc_roots)
            fb_roots = _multiset_take(r_s2, fc_roots)
            fact = _verify(Q2, fa_roots, fb_roots, fc_roots, tol)
            if fact is not None and not any(_same(fact, f) for f in found):
                found.append(fact)
        if found:
            break
    if not found:
        raise NotSeparableError("Q2 is not a product Fa(s1) Fb(s2) Fc(s1+s2)")
    if len(found) > 1:
        raise AmbiguityError([f.roots() for f in found])
    return found[0]


def _same(f: SeparableFactorization, g: SeparableFactorization) -> bool:
    return all(
        a.size == b.size and np.allclose(a, b, rtol=1e-8, atol=1e-10)
        for a, b in ((f.Fa, g.Fa), (f.Fb, g.Fb), (f.Fc, g.Fc))
    )


def _verify(Q2, fa_roots, fb_roots, fc_roots, tol):
    Fa, Fb, Fc = _real_monic(fa_roots), _real_monic(fb_roots), _real_monic(fc_roots)
    unit = BivariatePolynomial.from_factors(Fa, Fb, Fc)
    keys = sorted(set(unit.coefficients) | set(Q2.coefficients))
    u = np.array([unit.coefficients.get(k, 0.0) for k in keys])
    q = np.array([Q2.coefficients.get(k, 0.0) for k in keys])
    scale = float(u @ q / (u @ u))
    if np.max(np.abs(q - scale * u)) > tol * max(1.0, np.max(np.abs(q))):
        return None
    return SeparableFactorization(Fa, Fb, Fc, scale)


@dataclass(frozen=True)
class KernelExpansion:
    """``P2/Q2 = constant + remainder(s1, s2) / Q2`` with ``Q2`` factored."""

    constant: float
    remainder: BivariatePolynomial
    factorization: SeparableFactorization

    def sum_coefficients(self):
        """Remainder as a polynomial in ``s1 + s2`` (ascending), if it is one."""
        return self.remainder.as_function_of_sum()

    def __call__(self, s1, s2):
        return self.constant + self.remainder(s1, s2) / self.factorization(s1, s2)


def expand_kernel(P2: BivariatePolynomial, Q2: BivariatePolynomial) -> KernelExpansion:
    """Factor ``Q2`` and split off the constant part of ``P2/Q2``."""
    fact = factor_separable(Q2)
    Qf = fact.expand()
    constant = 0.0
    if P2.total_degree >= Qf.total_degree:
        top_p, top_q = P2.top_part(), Qf.top_part()
        keys = set(top_p.coefficients) | set(top_q.coefficients)
        k0 = next(iter(top_q.coefficients))
        constant = top_p.coefficients.get(k0, 0.0) / top_q.coefficients[k0]
        if P2.total_degree > Qf.total_degree or any(
            abs(top_p.coefficients.get(k, 0.0) - constant * top_q.coefficients.get(k, 0.0)) > 1e-12 * top_p.max_abs()
            for k in keys
        ):
            raise NotSeparableError("P2/Q2 does not have a constant polynomial part")
    rem = P2 - Qf.scaled(constant)
    floor = 1e-12 * max(1.0, P2.max_abs(), abs(constant) * Qf.max_abs())
    rem = BivariatePolynomial({m: c for m, c in rem.coefficients.items() if abs(c) > floor})
    return KernelExpansion(constant, rem, fact)


# -- univariate partial fractions -------------------------------------------

@dataclass(frozen=True)
class PartialFractions:
    """``poly(s) + sum residue / (s - pole)**power``; ``poly`` is ascending."""

    terms: tuple[tuple[complex, complex, int], ...]
    polynomial: np.ndarray = field(default_factory=lambda: np.zeros(1))

    def __call__(self, s):
        val = P.polyval(s, self.polynomial)
        for pole, res, power in self.terms:
            val = val + res / (s - pole) ** power
        return val


def _taylor_shift(coefs, p: complex) -> np.ndarray:
    """Coefficients of q(p + e) in powers of e."""
    c = np.asarray(coefs, dtype=complex)
    n = c.size
    out = np.zeros(n, dtype=complex)
    for k in range(n):
        out[k] = sum(c[i] * comb(i, k) * p ** (i - k) for i in range(k, n))
    return out


def _cluster(roots, tol):
    clusters: list[list[complex]] = []
    for r in roots:
        for cl in clusters:
            if abs(cl[0] - r) <= tol * max(1.0, abs(r)):
                cl.append(r)
                break
        else:
            clusters.append([r])
    return [(complex(np.mean(cl)), len(cl)) for cl in clusters]


def partial_fractions(r: RationalFunction, cluster_tol: float = 1e-6) -> PartialFractions:
    """Partial-fraction expansion with repeated-pole support.

    A root of multiplicity m comes back from the eigenvalue solver spread by
    about ``eps**(1/m)``, so clustering is retried with wider tolerances until
    the expansion reproduces ``r``.
    """
    if r.den_degree < 1:
        raise ValueError("denominator must have degree >= 1")
    poly, proper = r.divmod()
    roots = poly_roots(proper.den)
    tols = [cluster_tol] + [t for t in (1e-5, 1e-4, 1e-3) if t > cluster_tol]
    for k, tol in enumerate(tols):
        poles = _cluster(roots, tol)
        pf = PartialFractions(_pf_terms(proper, poles), poly)
        try:
            _check_reconstruction(r, pf, poles)
            return pf
        except NumericFailure:
            if k == len(tols) - 1:
                raise
    raise AssertionError("unreachable")


def _pf_terms(proper: RationalFunction, poles) -> tuple:
    terms = []
    for idx, (p, m) in enumerate(poles):
        other = np.array([1.0 + 0j])
        for jdx, (q, mq) in enumerate(poles):
            if jdx != idx:
                for _ in range(mq):
                    other = P.polymul(other, [-q, 1.0])
        num_t = _taylor_shift(proper.num, p)
        den_t = _taylor_shift(other, p)
        if abs(den_t[0]) == 0:
            raise NumericFailure(f"poles too close to separate near {p}")
        # series quotient g(p + e) = sum_k g_k e^k, k < m
        g = np.zeros(m, dtype=complex)
        num_pad = np.zeros(m, dtype=complex)
        num_pad[: min(m, num_t.size)] = num_t[:m]
        den_pad = np.zeros(m, dtype=complex)
        den_pad[: min(m, den_t.size)] = den_t[:m]
        for k in range(m):
            g[k] = (num_pad[k] - sum(g[i] * den_pad[k - i] for i in range(k))) / den_pad[0]
        for k in range(m):
            terms.append((p, complex(g[k]), m - k))
    terms.sort(key=lambda t: (t[0].real, t[0].imag, t[2]))
    return tuple(terms)


def _check_reconstruction(r, pf, poles, n_points: int = 8):
    rng = np.random.default_rng(0)
    radius = max([1.0] + [abs(p) for p, _ in poles])
    pts = radius * (rng.standard_normal(n_points) + 1j * rng.standard_normal(n_points)) * 2
    ref = r(pts)
    err = np.max(np.abs(pf(pts) - ref) / np.maximum(np.abs(ref), 1e-300))
    if not np.isfinite(err) or err > 1e-6:
        cond = np.linalg.cond(np.vander(np.array([p for p, _ in poles]))) if len(poles) > 1 else 1.0
        raise NumericFailure(
            f"partial-fraction reconstruction error {err:.3e} (pole Vandermonde condition {cond:.3e})"
        )


def factorization_report(fact: SeparableFactorization, sig: int = 12) -> str:
    """Text listing of the factors and the partial fractions of their reciprocals."""
    lines = [f"scale = {fact.scale:.{sig}g}"]
    for name, var, coefs in (("Fa", "s1", fact.Fa), ("Fb", "s2", fact.Fb), ("Fc", "s1+s2", fact.Fc)):
        rf = RationalFunction([1.0], coefs)
        lines.append(f"{name}({var}) coefficients (ascending) = " + ", ".join(f"{c:.{sig}g}" for c in coefs))
        if rf.den_degree >= 1:
            for pole, res, power in partial_fractions(rf).terms:
                lines.append(
                    f"  1/{name}: pole {pole.real:.{sig}g}{pole.imag:+.{sig}g}j "
                    f"residue {res.real:.{sig}g}{res.imag:+.{sig}g}j power {power}"
                )
    return "\n".join(lines) + "\n"


# -- cascade realization -----------------------------------------------------

@dataclass(frozen=True)
class CascadeRealization:
    """Chain of linear blocks sharing (A, N_mat, b, c) of a bilinear model.

    ``output_orders`` selects which homogeneous orders enter the cumulative
    output; all stages up to ``max_order`` are always simulated because each
    one drives the next.
    """

    A: np.ndarray
    N_mat: np.ndarray
    b: np.ndarray
    c: np.ndarray
    max_order: int
    output_orders: tuple[int, ...] = ()

    def __post_init__(self):
        if self.max_order < 1:
            raise ValueError("max_order must be positive")
        orders = tuple(self.output_orders) or tuple(range(1, self.max_order + 1))
        if any(not 1 <= k <= self.max_order for k in orders):
            raise ValueError("output orders must lie in 1..max_order")
        object.__setattr__(self, "output_orders", orders)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def restricted(self, orders) -> "CascadeRealization":
        return CascadeRealization(self.A, self.N_mat, self.b, self.c, self.max_order, tuple(orders))

    def rhs(self, Z: np.ndarray, u: float) -> np.ndarray:
        """Stage derivatives for stacked states ``Z`` of shape (max_order, n)."""
        dZ = Z @ self.A.T
        dZ[0] += self.b * u
        if self.max_order > 1:
            dZ[1:] += (Z[:-1] @ self.N_mat.T) * u
        return dZ

    def stage_outputs(self, Z: np.ndarray) -> np.ndarray:
        return Z @ self.c

    def output(self, Z: np.ndarray) -> float:
        y = self.stage_outputs(Z)
        return float(sum(y[k - 1] for k in self.output_orders))


def build_cascade(bsys: BilinearSystem, max_order: int) -> CascadeRealization:
    return CascadeRealization(bsys.A, bsys.N_mat, bsys.b, bsys.c, max_order)


def simulate_volterra(casc: CascadeRealization, u: InputSignal, T: float, dt: float) -> SimulationTrace:
    """RK4 integration of the stacked stages from rest.

    The trace carries ``y1 .. yn`` (homogeneous orders) and ``y`` (sum over
    ``casc.output_orders``).
    """
    shape = (casc.max_order, casc.n)

    def rhs(t, x):
        return casc.rhs(x.reshape(shape), u(t)).ravel()

    t, X = rk4(rhs, np.zeros(casc.max_order * casc.n), T, dt, label="Volterra cascade")
    Y = X.reshape(len(t), *shape) @ casc.c
    channels = {"t": t, "u": np.array([u(ti) for ti in t])}
    for k in range(casc.max_order):
        channels[f"y{k + 1}"] = Y[:, k]
    channels["y"] = sum(Y[:, k - 1] for k in casc.output_orders)
    return SimulationTrace(dt, channels)
