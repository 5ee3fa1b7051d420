"""Frequency-domain Volterra kernels of a bilinear system.

For ``dz/dt = A z + N z u + b u``, ``y = c . z`` the order-k transfer
kernel (in the triangular, non-symmetrized form) is::

    H_k(s1..sk) = c (S_k I - A)^-1 N (S_{k-1} I - A)^-1 N ... (S_1 I - A)^-1 b

with partial sums ``S_j = s1 + ... + sj``.
"""

from __future__ import annotations

import csv
from typing import Iterable, Sequence

import numpy as np

from .carleman import BilinearSystem
from .errors import PoleHitError
from .rational import RationalFunction

COND_LIMIT = 1e12


def _resolvent_solve(A: np.ndarray, s: complex, rhs: np.ndarray) -> np.ndarray:
    M = s * np.eye(A.shape[0]) - A
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise PoleHitError(s, cond)
    return np.linalg.solve(M, rhs)


def eval_kernel(bsys: BilinearSystem, order: int, s: Sequence[complex]) -> complex:
    """Order-``order`` kernel at the frequency tuple ``s``."""
    s = np.asarray(s, dtype=complex).ravel()
    if order < 1 or s.size != order:
        raise ValueError(f"need exactly {order} frequencies, got {s.size}")
    if not np.all(np.isfinite(s)):
        raise ValueError("frequencies must be finite")
    sums = np.cumsum(s)
    v = _resolvent_solve(bsys.A, sums[0], bsys.b.astype(complex))
    for j in range(1, order):
        v = _resolvent_solve(bsys.A, sums[j], bsys.N_mat @ v)
    return complex(bsys.c @ v)


def faddeev_leverrier(A: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Characteristic polynomial and adjugate coefficients of ``sI - A``.

    Returns ``(p, [M_1, ..., M_n])`` with ``p`` ascending and
    ``adj(sI - A) = sum_k M_k s**(n-k)``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    n = A.shape[0]
    p = np.zeros(n + 1)
    p[n] = 1.0
    M = np.zeros_like(A)
    mats = []
    for k in range(1, n + 1):
        M = A @ M + p[n - k + 1] * np.eye(n)
        mats.append(M)
        p[n - k] = -np.trace(A @ M) / k
    return p, mats


def h1_rational(bsys: BilinearSystem) -> RationalFunction:
    """First-order kernel as an exact rational function of ``s``."""
    A11, b1, c1 = bsys.linear_block()
    p, mats = faddeev_leverrier(A11)
    n = A11.shape[0]
    num = np.zeros(n)
    for k, M in enumerate(mats, start=1):
        num[n - k] = c1 @ M @ b1
    return RationalFunction(num, p)


def dc_gain(bsys: BilinearSystem, order: int) -> float:
    value = eval_kernel(bsys, order, np.zeros(order))
    if abs(value.imag) >= 1e-12:
        raise ArithmeticError(f"DC kernel value has imaginary part {value.imag:.3e}")
    return value.real


def steady_state_prediction(bsys: BilinearSystem, max_order: int, u_amp: float) -> float:
    """Steady output of the order-``max_order`` truncated Volterra model for a step."""
    if max_order < 1:
        raise ValueError("max_order must be positive")
    return sum(dc_gain(bsys, k) * u_amp**k for k in range(1, max_order + 1))


def kernel_grid(bsys: BilinearSystem, order: int, points: Iterable[Sequence[complex]]):
    """Evaluate a kernel over a list of frequency tuples.

    Yields ``(tuple, value)`` pairs; ``value`` is ``None`` when the point hits
    a pole.
    """
    for pt in points:
        try:
            yield tuple(complex(v) for v in pt), eval_kernel(bsys, order, pt)
        except PoleHitError:
            yield tuple(complex(v) for v in pt), None


def write_kernel_csv(path, order: int, rows, sig: int = 12) -> None:
    header = ["order"]
    for j in range(order):
        header += [f"s{j + 1}_re", f"s{j + 1}_im"]
    header += ["H_re", "H_im", "status"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for pt, val in rows:
            row = [str(order)]
            for v in pt:
                row += [f"{v.real:.{sig}g}", f"{v.imag:.{sig}g}"]
            if val is None:
                row += ["nan", "nan", "pole"]
            else:
                row += [f"{val.real:.{sig}g}", f"{val.imag:.{sig}g}", "ok"]
            w.writerow(row)
