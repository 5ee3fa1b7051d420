"""Simulation traces and the fixed-step RK4 driver shared by all simulators."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DivergenceError

InputSignal = Callable[[float], float]


def step(amplitude: float, t0: float = 0.0) -> InputSignal:
    """Step of height ``amplitude`` switched on at ``t0`` (inclusive)."""
    amplitude = float(amplitude)
    return lambda t: amplitude if t >= t0 else 0.0


def pulse(amplitude: float, width: float, t0: float = 0.0) -> InputSignal:
    amplitude = float(amplitude)
    return lambda t: amplitude if t0 <= t < t0 + width else 0.0


def zero_input(t: float) -> float:
    return 0.0


@dataclass
class SimulationTrace:
    """Uniformly sampled named channels, all of equal length.

    The time channel is always present under the name ``"t"``.
    """

    dt: float
    channels: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        lengths = {len(v) for v in self.channels.values()}
        if len(lengths) > 1:
            raise ValueError(f"channels have unequal lengths {sorted(lengths)}")
        self.channels = {k: np.asarray(v, dtype=float) for k, v in self.channels.items()}

    def __getitem__(self, name: str) -> np.ndarray:
        return self.channels[name]

    def __contains__(self, name: str) -> bool:
        return name in self.channels

    def __len__(self) -> int:
        return len(self.channels["t"]) if "t" in self.channels else 0

    @property
    def t(self) -> np.ndarray:
        return self.channels["t"]

    def names(self) -> list[str]:
        return list(self.channels)

    def to_csv(self, path, columns=None, sig: int = 12) -> None:
        columns = list(columns or self.channels)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for row in zip(*(self.channels[c] for c in columns)):
                writer.writerow([f"{v:.{sig}g}" for v in row])


def n_steps(T: float, dt: float) -> int:
    if not (T > 0 and 0 < dt < T):
        raise ValueError(f"need T > 0 and 0 < dt < T, got T={T}, dt={dt}")
    return int(round(T / dt))


def rk4(rhs: Callable[[float, np.ndarray], np.ndarray], x0, T: float, dt: float,
        label: str = "simulation") -> tuple[np.ndarray, np.ndarray]:
    """Classical fixed-step RK4; returns sample times and the state history."""
    steps = n_steps(T, dt)
    x = np.array(x0, dtype=float)
    hist = np.empty((steps + 1, x.size))
    hist[0] = x
    with np.errstate(over="ignore", invalid="ignore"):
        return _rk4_loop(rhs, x, hist, steps, dt, label)


def _rk4_loop(rhs, x, hist, steps, dt, label):
    # non-finite states are reported as DivergenceError, not as warnings
    t = 0.0
    for i in range(steps):
        k1 = rhs(t, x)
        k2 = rhs(t + dt / 2, x + dt / 2 * k1)
        k3 = rhs(t + dt / 2, x + dt / 2 * k2)
        k4 = rhs(t + dt, x + dt * k3)
        x = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = (i + 1) * dt
        if not np.all(np.isfinite(x)):
            raise DivergenceError(t, label)
        hist[i + 1] = x
    return np.arange(steps + 1) * dt, hist
