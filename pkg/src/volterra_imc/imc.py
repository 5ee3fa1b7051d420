"""IMC-Volterra controller synthesis and closed-loop simulation.

The linear part is the usual IMC design on the first-order kernel: split
``H1 = H_A * H_M`` into an all-pass factor carrying the right-half-plane
zeros and a minimum-phase factor, then invert the latter behind the filter
``F(s) = 1 / (lam s + 1)**r``. Higher-order kernels enter as a feedback
correction ``C* = F^-1 sum_{k>=2} H_k`` around the linear controller, so that
the controller output obeys::

    u = Cbar[e] - H_M^-1[chat],   Cbar = F / H_M,   chat = sum_{k>=2} y_k[u]

where ``y_k[u]`` are the homogeneous outputs of the Volterra cascade driven by
the controller output itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .carleman import BilinearSystem
from .errors import DimensionError, DivergenceError, ProperenessError, UnstablePlantError
from .plant_models import InputAffineSystem, OperatingPoint, find_equilibrium
from .rational import RationalFunction, poly_from_roots, trim
from .realization import CascadeRealization, build_cascade
from .trace import SimulationTrace, n_steps
from .volterra_freq import h1_rational


@dataclass(frozen=True)
class AllPassFactorization:
    h_allpass: RationalFunction
    h_minphase: RationalFunction


@dataclass(frozen=True)
class IMCFilter:
    lam: float = 0.01
    r: int = 1

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("filter time constant must be positive")
        if self.r < 1:
            raise ValueError("filter order must be at least 1")

    def as_rational(self) -> RationalFunction:
        den = np.array([1.0])
        for _ in range(self.r):
            den = np.polynomial.polynomial.polymul(den, [1.0, self.lam])
        return RationalFunction([1.0], den)


def factor_allpass(h1: RationalFunction) -> AllPassFactorization:
    """Reflect right-half-plane zeros of ``h1`` into a unit-DC-gain all-pass factor."""
    poles = h1.poles()
    if np.any(poles.real >= 0):
        raise UnstablePlantError(f"plant has poles in the closed right half-plane: {poles[poles.real >= 0]}")
    zeros = h1.zeros()
    if np.any(np.abs(zeros.real) < 1e-12 * np.maximum(1.0, np.abs(zeros))):
        raise ValueError("zeros on the imaginary axis cannot be inverted")
    rhp = zeros[zeros.real > 0]
    lhp = zeros[zeros.real < 0]
    if rhp.size == 0:
        return AllPassFactorization(RationalFunction.constant(1.0), h1)
    lead = trim(h1.num)[-1]
    # prod (zeta - s) over the RHP zeros, ascending coefficients
    ap_num = poly_from_roots(rhp) * (-1.0) ** rhp.size
    ap_den = poly_from_roots(-rhp)
    mp_num = lead * (-1.0) ** rhp.size * poly_from_roots(np.concatenate([lhp, -rhp]))
    return AllPassFactorization(
        RationalFunction(ap_num, ap_den, cancel_tol=0),
        RationalFunction(mp_num, h1.den, cancel_tol=0),
    )


def linear_controller(fact: AllPassFactorization, filt: IMCFilter) -> RationalFunction:
    """``F / H_M``, the realizable linear IMC controller."""
    c = filt.as_rational() * fact.h_minphase.inverse()
    if not c.is_proper():
        raise ProperenessError(
            f"controller is improper (relative degree {c.relative_degree}); "
            f"raise the filter order above {filt.r}"
        )
    return c


@dataclass(frozen=True)
class VolterraIMCController:
    linear_part: RationalFunction
    model: CascadeRealization
    filter: IMCFilter
    factorization: AllPassFactorization
    h1: RationalFunction
    correction_enabled: bool = True

    @property
    def max_order(self) -> int:
        return self.model.max_order

    @property
    def correction_model(self) -> CascadeRealization | None:
        if self.max_order < 2 or not self.correction_enabled:
            return None
        return self.model.restricted(range(2, self.max_order + 1))

    @property
    def internal_model(self) -> CascadeRealization:
        """Cascade whose cumulative output is the internal-model prediction."""
        return self.model if self.correction_enabled else self.model.restricted((1,))


def build_controller(
    bsys: BilinearSystem,
    max_order: int = 3,
    lam: float = 0.01,
    r: int = 1,
    correction_enabled: bool = True,
) -> VolterraIMCController:
    if max_order < 1:
        raise ValueError("max_order must be positive")
    h1 = h1_rational(bsys)
    fact = factor_allpass(h1)
    filt = IMCFilter(lam, r)
    cbar = linear_controller(fact, filt)
    return VolterraIMCController(cbar, build_cascade(bsys, max_order), filt, fact, h1, correction_enabled)


def controller_report(ctrl: VolterraIMCController, sig: int = 12) -> str:
    def coefs(label, rf):
        num = ", ".join(f"{v:.{sig}g}" for v in rf.num)
        den = ", ".join(f"{v:.{sig}g}" for v in rf.den)
        return [f"{label}.num (ascending) = {num}", f"{label}.den (ascending) = {den}"]

    lines = [f"max_order = {ctrl.max_order}", f"lambda = {ctrl.filter.lam:.{sig}g}", f"r = {ctrl.filter.r}",
             f"correction_enabled = {str(ctrl.correction_enabled).lower()}"]
    lines += coefs("H1", ctrl.h1)
    lines += coefs("HA", ctrl.factorization.h_allpass)
    lines += coefs("HM", ctrl.factorization.h_minphase)
    lines += coefs("F", ctrl.filter.as_rational())
    lines += coefs("Cbar", ctrl.linear_part)
    return "\n".join(lines) + "\n"


class _LTIBlock:
    """State-space block of a proper rational function."""

    def __init__(self, rf: RationalFunction):
        self.A, self.B, self.C, self.D = rf.to_state_space()
        self.n = self.A.shape[0]

    def out(self, x, v):
        return float(self.C @ x) + self.D * v if self.n else self.D * v

    def deriv(self, x, v):
        return self.A @ x + self.B * v if self.n else x


def closed_loop_step(
    plant: InputAffineSystem,
    op: OperatingPoint,
    ctrl: VolterraIMCController,
    setpoint: float | Callable[[float], float],
    T: float,
    dt: float,
    start_at_equilibrium: bool = True,
) -> SimulationTrace:
    """Simulate the IMC-Volterra loop around ``plant`` with fixed-step RK4.

    The plant runs in physical coordinates from its exact equilibrium at
    ``op.u0`` (``op.x0`` seeds the Newton solve), the controller in deviation
    coordinates. The setpoint is a deviation of the output from that
    equilibrium.

    Channels: ``t, setpoint, y, u, u_abs, y_model, correction, ideal`` where
    ``ideal`` is the filtered setpoint passed through the all-pass factor.
    """
    if len(op.x0) != plant.dim:
        raise DimensionError("operating point does not match the plant")
    sp = setpoint if callable(setpoint) else (lambda t, v=float(setpoint): v)
    x_eq = find_equilibrium(plant, op.u0, op.x0) if start_at_equilibrium else np.array(op.x0)
    y_eq = plant.output(x_eq)

    model = ctrl.internal_model
    corr = ctrl.correction_model
    cbar = _LTIBlock(ctrl.linear_part)
    ideal = _LTIBlock(ctrl.filter.as_rational() * ctrl.factorization.h_allpass)
    if corr is not None:
        q, rem = ctrl.factorization.h_minphase.inverse().divmod()
        if q.size > 2:
            raise NotImplementedError(
                "nonlinear correction needs the minimum-phase kernel to have relative degree <= 1"
            )
        q = np.pad(q, (0, 2 - q.size))
        rem_blk = _LTIBlock(rem)
        corr_idx = np.array(corr.output_orders) - 1
    else:
        rem_blk = None

    n, K = model.n, model.max_order
    sizes = [plant.dim, K * n, cbar.n, ideal.n, rem_blk.n if rem_blk else 0]
    cuts = np.cumsum([0] + sizes)

    def split(X):
        return [X[cuts[i]:cuts[i + 1]] for i in range(len(sizes))]

    def control(t, X):
        xp, z, xc, xi, xr = split(X)
        Z = z.reshape(K, n)
        y_dev = plant.output(xp) - y_eq
        y_hat = model.output(Z)
        e = sp(t) - (y_dev - y_hat)
        if corr is None:
            return cbar.out(xc, e), e, y_dev, y_hat, 0.0
        ys = Z @ model.c
        chat = float(ys[corr_idx].sum())
        # d(chat)/dt = sum_k c (A z_k + N z_{k-1} u) is affine in u
        base = float(sum(model.c @ (model.A @ Z[k]) for k in corr_idx))
        slope = float(sum(model.c @ (model.N_mat @ Z[k - 1]) for k in corr_idx))
        num = cbar.out(xc, e) - q[0] * chat - q[1] * base - rem_blk.out(xr, chat)
        den = 1.0 + q[1] * slope
        if abs(den) < 1e-12:
            raise DivergenceError(t, "IMC-Volterra loop (singular correction)")
        return num / den, e, y_dev, y_hat, chat

    def rhs(t, X):
        xp, z, xc, xi, xr = split(X)
        u, e, _, _, chat = control(t, X)
        parts = [
            plant.f(xp) + plant.g(xp) * (op.u0 + u),
            model.rhs(z.reshape(K, n), u).ravel(),
            cbar.deriv(xc, e),
            ideal.deriv(xi, sp(t)),
        ]
        if rem_blk is not None:
            parts.append(rem_blk.deriv(xr, chat))
        return np.concatenate(parts)

    steps = n_steps(T, dt)
    X = np.concatenate([x_eq, np.zeros(sum(sizes[1:]))])
    rec = np.empty((steps + 1, 7))
    with np.errstate(over="ignore", invalid="ignore"):
        _run_loop(X, rec, steps, dt, sp, control, rhs, split, ideal, ctrl.max_order)
    names = ("t", "setpoint", "y", "u", "y_model", "correction", "ideal")
    channels = {k: rec[:, j] for j, k in enumerate(names)}
    channels["u_abs"] = channels["u"] + op.u0
    return SimulationTrace(dt, channels)


def _run_loop(X, rec, steps, dt, sp, control, rhs, split, ideal, order):
    for i in range(steps + 1):
        t = i * dt
        u, e, y_dev, y_hat, chat = control(t, X)
        xi = split(X)[3]
        rec[i] = (t, sp(t), y_dev, u, y_hat, chat, ideal.out(xi, sp(t)))
        if i == steps:
            break
        k1 = rhs(t, X)
        k2 = rhs(t + dt / 2, X + dt / 2 * k1)
        k3 = rhs(t + dt / 2, X + dt / 2 * k2)
        k4 = rhs(t + dt, X + dt * k3)
        X = X + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(X)):
            raise DivergenceError(t + dt, f"closed loop (order {order})")


def isci(trace: SimulationTrace, channel: str = "u") -> float:
    """Integral of the squared control input (trapezoidal rule)."""
    t = trace.t
    if len(t) < 2:
        raise ValueError("trace needs at least two samples")
    if not np.allclose(np.diff(t), trace.dt, rtol=1e-9, atol=1e-15):
        raise ValueError("trace is not uniformly sampled")
    v = trace[channel]
    return float(np.trapezoid(v * v, dx=trace.dt))
