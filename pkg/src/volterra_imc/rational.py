"""Univariate real rational functions with ascending coefficient storage."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P


def trim(coefs, tol: float = 0.0) -> np.ndarray:
    """Drop trailing (highest-degree) coefficients with magnitude <= tol."""
    c = np.atleast_1d(np.asarray(coefs, dtype=float))
    nz = np.flatnonzero(np.abs(c) > tol)
    return c[: nz[-1] + 1] if nz.size else np.zeros(1)


def degree(coefs) -> int:
    c = trim(coefs)
    return -1 if (c.size == 1 and c[0] == 0) else c.size - 1


def poly_roots(coefs) -> np.ndarray:
    """Roots of an ascending-coefficient polynomial (companion-matrix eigenvalues)."""
    c = trim(coefs)
    if c.size <= 1:
        return np.zeros(0, dtype=complex)
    return np.sort_complex(P.polyroots(c).astype(complex))


def poly_from_roots(roots, lead: float = 1.0) -> np.ndarray:
    """Real ascending polynomial with the given roots (conjugate pairs assumed)."""
    if len(roots) == 0:
        return np.array([float(lead)])
    return lead * np.real(P.polyfromroots(roots))


def _cancel_common(num, den, tol):
    zn, zd = list(poly_roots(num)), list(poly_roots(den))
    common = []
    for z in list(zn):
        scale = max(1.0, abs(z))
        match = [k for k, p in enumerate(zd) if abs(p - z) <= tol * scale]
        if match:
            common.append(z)
            zn.remove(z)
            zd.pop(match[0])
    if not common:
        return num, den
    return poly_from_roots(zn, trim(num)[-1]), poly_from_roots(zd, trim(den)[-1])


@dataclass(frozen=True, eq=False)
class RationalFunction:
    """``num(s) / den(s)`` with the denominator normalized to be monic.

    Coefficients are ascending (index k multiplies s**k). Common roots of
    numerator and denominator (relative distance below ``cancel_tol``) are
    cancelled on construction.
    """

    num: np.ndarray
    den: np.ndarray

    def __init__(self, num, den, cancel_tol: float = 1e-9):
        num, den = trim(num), trim(den)
        if den.size == 1 and den[0] == 0:
            raise ZeroDivisionError("denominator is identically zero")
        if not (np.all(np.isfinite(num)) and np.all(np.isfinite(den))):
            raise ValueError("coefficients must be finite")
        if cancel_tol and degree(num) > 0 and degree(den) > 0:
            num, den = _cancel_common(num, den, cancel_tol)
        lead = den[-1]
        object.__setattr__(self, "num", trim(num / lead))
        object.__setattr__(self, "den", trim(den / lead))

    @classmethod
    def from_descending(cls, num, den, **kw) -> "RationalFunction":
        return cls(np.asarray(num, float)[::-1], np.asarray(den, float)[::-1], **kw)

    @classmethod
    def constant(cls, k: float) -> "RationalFunction":
        return cls([k], [1.0])

    def __call__(self, s):
        return P.polyval(s, self.num) / P.polyval(s, self.den)

    def __mul__(self, other):
        if np.isscalar(other):
            return RationalFunction(self.num * other, self.den)
        return RationalFunction(P.polymul(self.num, other.num), P.polymul(self.den, other.den))

    __rmul__ = __mul__

    def __add__(self, other):
        if np.isscalar(other):
            other = RationalFunction.constant(other)
        return RationalFunction(
            P.polyadd(P.polymul(self.num, other.den), P.polymul(other.num, self.den)),
            P.polymul(self.den, other.den),
        )

    def __neg__(self):
        return RationalFunction(-self.num, self.den, cancel_tol=0)

    def __sub__(self, other):
        return self + (-other if not np.isscalar(other) else -float(other))

    def inverse(self) -> "RationalFunction":
        return RationalFunction(self.den, self.num)

    @property
    def num_degree(self) -> int:
        return degree(self.num)

    @property
    def den_degree(self) -> int:
        return degree(self.den)

    @property
    def relative_degree(self) -> int:
        return self.den_degree - self.num_degree

    def is_proper(self) -> bool:
        return self.relative_degree >= 0

    def poles(self) -> np.ndarray:
        return poly_roots(self.den)

    def zeros(self) -> np.ndarray:
        return poly_roots(self.num)

    def dc_gain(self) -> float:
        return float(self.num[0] / self.den[0])

    def divmod(self) -> tuple[np.ndarray, "RationalFunction"]:
        """Split into polynomial part and strictly proper remainder."""
        if self.num_degree < self.den_degree:
            return np.zeros(1), self
        q, r = P.polydiv(self.num, self.den)
        return trim(q), RationalFunction(r, self.den, cancel_tol=0)

    def close_to(self, other: "RationalFunction", tol: float = 1e-9) -> bool:
        if self.num.size != other.num.size or self.den.size != other.den.size:
            return False
        return bool(np.all(np.abs(self.num - other.num) <= tol) and np.all(np.abs(self.den - other.den) <= tol))

    def to_state_space(self):
        """Controllable canonical realization (A, B, C, D) of a proper function."""
        if not self.is_proper():
            raise ValueError("improper rational function has no state-space realization")
        n = self.den_degree
        a = self.den  # monic, ascending
        num = np.zeros(n + 1)
        num[: self.num.size] = self.num
        D = num[n]
        resid = num[:n] - D * a[:n]
        A = np.zeros((n, n))
        if n:
            A[:-1, 1:] = np.eye(n - 1)
            A[-1, :] = -a[:n]
        B = np.zeros(n)
        if n:
            B[-1] = 1.0
        return A, B, resid.copy(), float(D)

    def format(self, var: str = "s", sig: int = 12) -> str:
        def poly_str(c):
            terms = []
            for k in range(len(c) - 1, -1, -1):
                if c[k] == 0 and len(c) > 1:
                    continue
                mono = "" if k == 0 else (var if k == 1 else f"{var}^{k}")
                terms.append(f"{c[k]:.{sig}g}" + (f"*{mono}" if mono else ""))
            return " + ".join(terms).replace("+ -", "- ")
        return f"({poly_str(self.num)}) / ({poly_str(self.den)})"

    def __repr__(self) -> str:
        return f"RationalFunction({self.format(sig=6)})"
