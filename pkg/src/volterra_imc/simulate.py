"""Scenario engine: nonlinear ground truth, open-loop model comparison, metrics."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .carleman import BilinearSystem, lift, simulate_bilinear
from .imc import build_controller, closed_loop_step, isci
from .plant_models import (
    InputAffineSystem,
    OperatingPoint,
    find_equilibrium,
    shift_to_deviation,
    van_de_vusse,
)
from .realization import build_cascade, simulate_volterra
from .trace import InputSignal, SimulationTrace, rk4, step

__all__ = [
    "ScenarioConfig", "SimulationTrace", "SteadyState", "ComparisonRow",
    "integrate_nonlinear", "steady_state", "open_loop_compare", "model_error_scaling",
    "closed_loop_compare", "write_comparison_csv", "format_comparison",
]


@dataclass(frozen=True)
class ScenarioConfig:
    step_amplitude: float = 20.0
    horizon: float = 1.0
    dt: float = 1e-4
    model_orders: tuple[int, ...] = (1, 2, 3)
    lam: float = 0.01
    filter_order: int = 1
    setpoint: float = 0.1
    lift_order: int = 2
    window_fraction: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "model_orders", tuple(sorted(set(int(k) for k in self.model_orders))))
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if not 0 < self.dt <= self.horizon / 100:
            raise ValueError("dt must satisfy 0 < dt <= horizon/100")
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if any(k < 1 for k in self.model_orders):
            raise ValueError("model orders must be positive")


#: closed-loop defaults used by the ISCI comparison
CLOSED_LOOP_DEFAULT = ScenarioConfig(horizon=0.5, setpoint=0.1)


def integrate_nonlinear(sys: InputAffineSystem, x0, u: InputSignal, T: float, dt: float) -> SimulationTrace:
    """RK4 integration of the polynomial plant; records states and ``y``."""
    names = sys.state_names

    def rhs(t, x):
        return sys.f(x) + sys.g(x) * u(t)

    t, X = rk4(rhs, x0, T, dt, label="nonlinear plant")
    channels = {"t": t, "u": np.array([u(ti) for ti in t]), "y": X @ np.array(sys.c)}
    for k, name in enumerate(names):
        channels[name] = X[:, k]
    return SimulationTrace(dt, channels)


class SteadyState(NamedTuple):
    value: float
    spread: float
    unsettled: bool


def steady_state(trace: SimulationTrace, channel: str = "y", window_fraction: float = 0.05) -> SteadyState:
    """Mean over the last ``window_fraction`` of the samples plus a settledness check."""
    if not 0 < window_fraction <= 0.5:
        raise ValueError("window_fraction must lie in (0, 0.5]")
    v = trace[channel]
    k = max(1, int(round(window_fraction * len(v))))
    tail = v[-k:]
    mean = float(tail.mean())
    spread = float(tail.max() - tail.min())
    unsettled = spread > 0.01 * abs(mean) and spread > 1e-6
    if unsettled:
        warnings.warn(f"channel {channel!r} not settled: spread {spread:.3e} over final window", RuntimeWarning)
    return SteadyState(mean, spread, unsettled)


class ComparisonRow(NamedTuple):
    model: str
    steady_state: float
    percent_difference: float
    iae: float


def _default_plant():
    sys, op = van_de_vusse()
    return sys, op


def _deviation_lift(sys, op, order):
    return lift(shift_to_deviation(sys, op), order)


def open_loop_compare(
    cfg: ScenarioConfig,
    sys: InputAffineSystem | None = None,
    op: OperatingPoint | None = None,
    bsys: BilinearSystem | None = None,
    return_traces: bool = False,
):
    """Step the nonlinear plant and the Volterra cascades of each requested order.

    The nonlinear run starts at the exact equilibrium for ``op.u0`` and its
    output is reported as a deviation from that equilibrium. Percent
    differences are ``|model - nonlinear| / |nonlinear| * 100`` (zero when both
    vanish). ``iae`` is the integrated absolute error against the nonlinear
    deviation trajectory.
    """
    if sys is None:
        sys, op = _default_plant()
    if bsys is None:
        bsys = _deviation_lift(sys, op, cfg.lift_order)
    x_eq = find_equilibrium(sys, op.u0, op.x0)
    y_eq = sys.output(x_eq)
    amp = cfg.step_amplitude
    truth = integrate_nonlinear(sys, x_eq, lambda t: op.u0 + (amp if t >= 0 else 0.0), cfg.horizon, cfg.dt)
    y_true = truth["y"] - y_eq
    truth.channels["y_dev"] = y_true
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        ss_true = steady_state(SimulationTrace(cfg.dt, {"t": truth.t, "y": y_true}), "y", cfg.window_fraction).value
    rows = [ComparisonRow("nonlinear", ss_true, 0.0, 0.0)]
    traces = {"nonlinear": truth}
    if cfg.model_orders:
        casc = build_cascade(bsys, max(cfg.model_orders))
        tr = simulate_volterra(casc, step(amp), cfg.horizon, cfg.dt)
        cumulative = np.cumsum([tr[f"y{k}"] for k in range(1, casc.max_order + 1)], axis=0)
        for k in cfg.model_orders:
            y_k = cumulative[k - 1]
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                ss = steady_state(SimulationTrace(cfg.dt, {"t": tr.t, "y": y_k}), "y", cfg.window_fraction).value
            pct = 0.0 if ss == ss_true else abs(ss - ss_true) / abs(ss_true) * 100 if ss_true else float("inf")
            iae = float(np.trapezoid(np.abs(y_k - y_true), dx=cfg.dt))
            rows.append(ComparisonRow(f"volterra_order{k}", ss, pct, iae))
            traces[f"volterra_order{k}"] = SimulationTrace(
                cfg.dt, {"t": tr.t, "u": tr["u"], **{f"y{j}": tr[f"y{j}"] for j in range(1, k + 1)}, "y": y_k}
            )
    return (rows, traces) if return_traces else rows


def model_error_scaling(
    sys: InputAffineSystem,
    op: OperatingPoint,
    bsys: BilinearSystem,
    amplitudes: Sequence[float],
    T: float = 0.1,
    dt: float = 1e-4,
) -> tuple[list[float], list[float]]:
    """Peak ``|y_nonlinear - y_bilinear|`` for steps of each amplitude.

    The plant starts at the exact equilibrium for ``op.u0``; ``bsys`` should
    be lifted about that same point for the errors to reflect truncation
    only. Returns the peak errors and the ratios of consecutive entries.
    """
    x_eq = find_equilibrium(sys, op.u0, op.x0)
    y_eq = sys.output(x_eq)
    errors = []
    for a in amplitudes:
        if a == 0:
            errors.append(0.0)
            continue
        truth = integrate_nonlinear(sys, x_eq, lambda t, a=a: op.u0 + a, T, dt)
        model = simulate_bilinear(bsys, step(a), T, dt)
        errors.append(float(np.max(np.abs(truth["y"] - y_eq - model["y"]))))
    ratios = [e0 / e1 if e1 else float("inf") for e0, e1 in zip(errors, errors[1:])]
    return errors, ratios


def closed_loop_compare(
    cfg: ScenarioConfig = CLOSED_LOOP_DEFAULT,
    sys: InputAffineSystem | None = None,
    op: OperatingPoint | None = None,
    bsys: BilinearSystem | None = None,
) -> dict[int, tuple[SimulationTrace, float]]:
    """Closed-loop setpoint step for each controller order; returns trace and ISCI."""
    if sys is None:
        sys, op = _default_plant()
    if bsys is None:
        bsys = _deviation_lift(sys, op, cfg.lift_order)
    out = {}
    for k in cfg.model_orders:
        ctrl = build_controller(bsys, k, cfg.lam, cfg.filter_order)
        tr = closed_loop_step(sys, op, ctrl, cfg.setpoint, cfg.horizon, cfg.dt)
        out[k] = (tr, isci(tr))
    return out


def write_comparison_csv(path, rows: Sequence[ComparisonRow], sig: int = 12) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ComparisonRow._fields)
        for r in rows:
            w.writerow([r.model] + [f"{v:.{sig}g}" for v in r[1:]])


def format_comparison(rows: Sequence[ComparisonRow]) -> str:
    head = f"{'model':<18}{'steady_state':>16}{'diff_%':>12}{'IAE':>14}"
    lines = [head, "-" * len(head)]
    for r in rows:
        lines.append(f"{r.model:<18}{r.steady_state:>16.6f}{r.percent_difference:>12.2f}{r.iae:>14.6g}")
    return "\n".join(lines) + "\n"
