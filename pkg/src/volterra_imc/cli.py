"""Command-line entry point.

Exit codes: 0 success, 2 parse error, 3 precondition failure, 4 divergence,
5 internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .carleman import format_matrix_dump, lift
from .config import SystemConfig, load_config
from .errors import (
    ConfigError,
    DeviationFormError,
    DivergenceError,
    NotAnEquilibriumError,
    UnstablePlantError,
    ProperenessError,
)
from .imc import build_controller, closed_loop_step, controller_report, isci
from .plant_models import shift_to_deviation
from .simulate import format_comparison, open_loop_compare, write_comparison_csv
from .volterra_freq import h1_rational, kernel_grid, write_kernel_csv

EXIT_OK, EXIT_PARSE, EXIT_PRECONDITION, EXIT_DIVERGENCE, EXIT_INTERNAL = 0, 2, 3, 4, 5
OUT_ENV = "VOLTERRA_IMC_OUT"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def _out_dir(arg) -> Path:
    path = Path(arg or os.environ.get(OUT_ENV) or "out")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_manifest(directory: Path, command: str, config, extra=None) -> None:
    manifest = {
        "command": command,
        "config": str(config),
        "output_dir": str(directory),
        "deterministic": True,
        "version": __version__,
    }
    manifest.update(extra or {})
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _deviation_system(cfg: SystemConfig):
    if cfg.operating_point is None:
        return cfg.system
    return shift_to_deviation(cfg.system, cfg.operating_point)


def cmd_lift(args) -> int:
    cfg = load_config(args.config)
    bsys = lift(_deviation_system(cfg), args.order)
    out = Path(args.out) if args.out else _out_dir(None) / f"lift_order{args.order}.txt"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(format_matrix_dump(bsys))
    _write_manifest(out.parent, "lift", args.config, {"order": args.order, "outputs": [out.name]})
    return EXIT_OK


def _parse_orders(text: str) -> tuple[int, ...]:
    try:
        orders = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"--orders expects a comma-separated list of integers, got {text!r}") from None
    if any(k < 1 for k in orders):
        raise ConfigError("--orders must be positive")
    return orders


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if cfg.operating_point is None:
        raise DeviationFormError("simulation needs an [operating_point] section")
    overrides = {}
    for flag, key in (("step", "step_amplitude"), ("horizon", "horizon"), ("dt", "dt"), ("lam", "lam"),
                      ("filter_order", "filter_order"), ("setpoint", "setpoint"), ("lift_order", "lift_order")):
        value = getattr(args, flag)
        if value is not None:
            overrides[key] = value
    if args.orders:
        overrides["model_orders"] = _parse_orders(args.orders)
    if args.mode == "closed-loop" and args.horizon is None:
        overrides.setdefault("horizon", 0.5)
    try:
        scenario = replace(cfg.scenario, **overrides)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out = _out_dir(args.out_dir)
    system, op = cfg.system, cfg.operating_point
    bsys = lift(shift_to_deviation(system, op), scenario.lift_order)
    written = []

    if args.mode == "open-loop":
        rows, traces = open_loop_compare(scenario, system, op, bsys, return_traces=True)
        for name, tr in traces.items():
            fname = f"trace_{name}.csv"
            if name == "nonlinear":
                tr.to_csv(out / fname, ["t", "u", "y", "y_dev"])
            else:
                tr.to_csv(out / fname)
            written.append(fname)
        write_comparison_csv(out / "comparison.csv", rows)
        (out / "comparison.txt").write_text(format_comparison(rows))
        written += ["comparison.csv", "comparison.txt"]
    else:
        def run(k):
            ctrl = build_controller(bsys, k, scenario.lam, scenario.filter_order)
            return k, ctrl, closed_loop_step(system, op, ctrl, scenario.setpoint, scenario.horizon, scenario.dt)

        if args.parallel:
            with ThreadPoolExecutor() as pool:
                results = list(pool.map(run, scenario.model_orders))
        else:
            results = [run(k) for k in scenario.model_orders]
        lines = ["order,isci"]
        for k, ctrl, tr in results:
            fname = f"closed_loop_order{k}.csv"
            tr.to_csv(out / fname, ["t", "setpoint", "y", "u", "y_model", "correction"])
            (out / f"controller_order{k}.txt").write_text(controller_report(ctrl))
            lines.append(f"{k},{isci(tr):.12g}")
            written += [fname, f"controller_order{k}.txt"]
        (out / "isci.csv").write_text("\n".join(lines) + "\n")
        written.append("isci.csv")
    _write_manifest(out, "simulate", args.config, {"mode": args.mode, "outputs": written})
    return EXIT_OK


def _parse_points(text: str, order: int) -> list[tuple[complex, ...]]:
    pts = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        try:
            vals = tuple(complex(v.strip().replace(" ", "")) for v in chunk.split(","))
        except ValueError:
            raise ConfigError(f"cannot parse frequency tuple {chunk!r}") from None
        if len(vals) != order:
            raise ConfigError(f"frequency tuple {chunk!r} needs {order} entries")
        pts.append(vals)
    return pts


def _parse_jw_grid(text: str, order: int) -> list[tuple[complex, ...]]:
    try:
        start, stop, n = text.split(":")
        omegas = np.logspace(np.log10(float(start)), np.log10(float(stop)), int(n))
    except ValueError:
        raise ConfigError(f"--jw-grid expects START:STOP:N, got {text!r}") from None
    return [(1j * w,) * order for w in omegas]


def cmd_kernels(args) -> int:
    cfg = load_config(args.config)
    if not 1 <= args.order <= 3:
        raise ConfigError("--order must be 1, 2 or 3")
    bsys = lift(_deviation_system(cfg), args.lift_order)
    if args.zero_coupling:
        bsys = bsys.with_zero_coupling()
    points = []
    if args.points:
        points += _parse_points(args.points, args.order)
    if args.jw_grid:
        points += _parse_jw_grid(args.jw_grid, args.order)
    if not points:
        points = [(0j,) * args.order]
    out = _out_dir(args.out_dir)
    fname = f"kernel_order{args.order}.csv"
    write_kernel_csv(out / fname, args.order, kernel_grid(bsys, args.order, points))
    written = [fname]
    if args.order == 1:
        (out / "h1_rational.txt").write_text(h1_rational(bsys).format() + "\n")
        written.append("h1_rational.txt")
    _write_manifest(out, "kernels", args.config, {"order": args.order, "outputs": written})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="volterra-imc", description="Carleman/Volterra modelling and IMC-Volterra control.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("lift", help="write the bilinear (Carleman) matrices")
    s.add_argument("config")
    s.add_argument("--order", type=int, default=2)
    s.add_argument("--out", help="output file (default: <out-dir>/lift_order<N>.txt)")
    s.set_defaults(func=cmd_lift)

    s = sub.add_parser("simulate", help="open- or closed-loop scenario runs")
    s.add_argument("config")
    s.add_argument("--mode", choices=("open-loop", "closed-loop"), default="open-loop")
    s.add_argument("--step", type=float)
    s.add_argument("--orders")
    s.add_argument("--horizon", type=float)
    s.add_argument("--dt", type=float)
    s.add_argument("--lambda", dest="lam", type=float)
    s.add_argument("--filter-order", type=int)
    s.add_argument("--setpoint", type=float)
    s.add_argument("--lift-order", type=int)
    s.add_argument("--parallel", action="store_true")
    s.add_argument("--out-dir")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("kernels", help="evaluate frequency-domain kernels")
    s.add_argument("config")
    s.add_argument("--order", type=int, default=1)
    s.add_argument("--points", help="semicolon-separated tuples, e.g. '0,0;1j,2j'")
    s.add_argument("--jw-grid", help="START:STOP:N log-spaced omegas, s_k = j*omega for every k")
    s.add_argument("--lift-order", type=int, default=2)
    s.add_argument("--zero-coupling", action="store_true", help="zero the bilinear coupling matrix")
    s.add_argument("--out-dir")
    s.set_defaults(func=cmd_kernels)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DeviationFormError as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (NotAnEquilibriumError, UnstablePlantError, ProperenessError, ValueError) as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
