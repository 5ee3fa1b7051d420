"""Plain-text system/scenario config files.

Grammar (one ``key = value`` per line, ``#`` starts a comment)::

    [system]
    states = C_A, C_B
    f.C_A  = -50*C_A - 10*C_A^2
    g.C_A  = 10 - C_A
    ...
    output = C_B

    [operating_point]        # optional
    x0 = 3.0, 1.12
    u0 = 34.3
    residual_tolerance = 0.5

    [scenario]               # optional, any subset of ScenarioConfig fields
    step_amplitude = 20
    model_orders = 1, 2, 3

Polynomials are sums of terms ``coef*name^k*name...``; numbers use ``.`` as
decimal separator and may carry an exponent (``1e-4``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .plant_models import InputAffineSystem, OperatingPoint, PolynomialVectorField, poly_add
from .simulate import ScenarioConfig

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*^]))")

_SCENARIO_KEYS = {
    "step_amplitude": float, "horizon": float, "dt": float, "lambda": float,
    "filter_order": int, "setpoint": float, "lift_order": int, "window_fraction": float,
}


@dataclass
class SystemConfig:
    system: InputAffineSystem
    operating_point: OperatingPoint | None
    scenario: ScenarioConfig
    path: str | None = None


def _tokenize(text: str, line: int, col0: int, path):
    pos, out = 0, []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise ConfigError(f"unexpected character {text[pos:].lstrip()[0]!r}", line,
                              col0 + pos + len(text[pos:]) - len(text[pos:].lstrip()), path)
        kind = m.lastgroup
        start = m.start(kind)
        out.append((kind, m.group(kind), col0 + start))
        pos = m.end()
    return out


def parse_polynomial(text: str, names: list[str], line: int = 0, col0: int = 1, path=None) -> dict:
    """Parse ``text`` into {exponent tuple: coefficient} over ``names``."""
    toks = _tokenize(text, line, col0, path)
    if not toks:
        raise ConfigError("empty expression", line, col0, path)
    index = {n: i for i, n in enumerate(names)}
    poly: dict = {}
    i = 0
    while i < len(toks):
        sign = 1.0
        while i < len(toks) and toks[i][0] == "op" and toks[i][1] in "+-":
            sign *= -1.0 if toks[i][1] == "-" else 1.0
            i += 1
        coef, exps, need_factor = sign, [0] * len(names), True
        while need_factor:
            if i >= len(toks):
                raise ConfigError("expression ends unexpectedly", line, col0 + len(text), path)
            kind, val, col = toks[i]
            if kind == "num":
                coef *= float(val)
                i += 1
            elif kind == "name":
                if val not in index:
                    raise ConfigError(f"unknown state {val!r}", line, col, path)
                power = 1
                i += 1
                if i < len(toks) and toks[i][1] == "^":
                    if i + 1 >= len(toks) or toks[i + 1][0] != "num" or not toks[i + 1][1].isdigit():
                        raise ConfigError("exponent must be a non-negative integer", line, toks[i][2], path)
                    power = int(toks[i + 1][1])
                    i += 2
                exps[index[val]] += power
            else:
                raise ConfigError(f"expected a number or state name, found {val!r}", line, col, path)
            if i < len(toks) and toks[i][1] == "*":
                i += 1
            else:
                need_factor = False
        if i < len(toks) and not (toks[i][0] == "op" and toks[i][1] in "+-"):
            raise ConfigError(f"expected '+' or '-', found {toks[i][1]!r}", line, toks[i][2], path)
        poly = poly_add(poly, {tuple(exps): coef})
    return poly


def _split_numbers(value: str, line, col, path, kind=float):
    try:
        return [kind(v) for v in value.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"expected a list of numbers, got {value!r}", line, col, path) from None


def parse_config(text: str, path=None) -> SystemConfig:
    sections: dict[str, dict[str, tuple[str, int, int]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0]
        if not body.strip():
            continue
        stripped = body.strip()
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ConfigError("unterminated section header", lineno, body.index("[") + 1, path)
            current = stripped[1:-1].strip()
            if current not in ("system", "operating_point", "scenario"):
                raise ConfigError(f"unknown section [{current}]", lineno, body.index("[") + 1, path)
            sections.setdefault(current, {})
            continue
        if "=" not in body:
            raise ConfigError("expected 'key = value'", lineno, len(body) - len(body.lstrip()) + 1, path)
        if current is None:
            raise ConfigError("entry outside of any section", lineno, 1, path)
        key, value = body.split("=", 1)
        vcol = len(key) + 2 + (len(value) - len(value.lstrip()))
        sections[current][key.strip()] = (value.strip(), lineno, vcol)

    if "system" not in sections:
        raise ConfigError("missing [system] section", 1, 1, path)
    sysec = sections["system"]
    if "states" not in sysec:
        raise ConfigError("[system] needs 'states'", 1, 1, path)
    sval, sline, scol = sysec["states"]
    names = [n.strip() for n in sval.split(",") if n.strip()]
    if not names or any(not re.fullmatch(r"[A-Za-z_]\w*", n) for n in names):
        raise ConfigError("states must be a comma-separated list of identifiers", sline, scol, path)
    f_rows, g_rows = [], []
    for prefix, rows in (("f", f_rows), ("g", g_rows)):
        for n in names:
            entry = sysec.get(f"{prefix}.{n}")
            if entry is None:
                rows.append({})
                continue
            rows.append(parse_polynomial(entry[0], names, entry[1], entry[2], path))
    for key, (_, ln, _c) in sysec.items():
        if key not in ("states", "output") and not re.fullmatch(r"[fg]\.(%s)" % "|".join(map(re.escape, names)), key):
            raise ConfigError(f"unknown key {key!r} in [system]", ln, 1, path)
    if "output" not in sysec:
        raise ConfigError("[system] needs 'output'", sline, 1, path)
    oval, oline, ocol = sysec["output"]
    out_poly = parse_polynomial(oval, names, oline, ocol, path)
    c = [0.0] * len(names)
    for m, v in out_poly.items():
        if sum(m) != 1:
            raise ConfigError("output must be a linear combination of states", oline, ocol, path)
        c[m.index(1)] = v
    system = InputAffineSystem(
        PolynomialVectorField(len(names), tuple(f_rows)),
        PolynomialVectorField(len(names), tuple(g_rows)),
        tuple(c), tuple(names),
    )

    op = None
    if "operating_point" in sections:
        osec = sections["operating_point"]
        try:
            xv, xl, xc = osec["x0"]
            uv, ul, uc = osec["u0"]
        except KeyError as exc:
            raise ConfigError(f"[operating_point] needs {exc.args[0]!r}", 1, 1, path) from None
        x0 = _split_numbers(xv, xl, xc, path)
        if len(x0) != len(names):
            raise ConfigError(f"x0 needs {len(names)} values", xl, xc, path)
        u0 = _split_numbers(uv, ul, uc, path)
        tol = 0.5
        if "residual_tolerance" in osec:
            tol = _split_numbers(*osec["residual_tolerance"], path)[0]
        op = OperatingPoint(tuple(x0), u0[0], tol)

    kwargs = {}
    for key, (val, ln, col) in sections.get("scenario", {}).items():
        if key == "model_orders":
            kwargs["model_orders"] = tuple(_split_numbers(val, ln, col, path, int))
        elif key in _SCENARIO_KEYS:
            parsed = _split_numbers(val, ln, col, path, _SCENARIO_KEYS[key])
            if len(parsed) != 1:
                raise ConfigError(f"{key} takes a single number", ln, col, path)
            kwargs["lam" if key == "lambda" else key] = parsed[0]
        else:
            raise ConfigError(f"unknown scenario key {key!r}", ln, 1, path)
    try:
        scenario = ScenarioConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc), 1, 1, path) from None
    return SystemConfig(system, op, scenario, str(path) if path else None)


def load_config(path) -> SystemConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", 0, 0, str(path)) from None
    return parse_config(text, str(path))


def bundled_config(name: str = "vandevusse.toy") -> Path:
    return Path(__file__).with_name("data") / name


def format_config(system: InputAffineSystem, op: OperatingPoint | None = None) -> str:
    """Serialize a system back to the config grammar."""
    names = list(system.state_names)

    def poly_str(p):
        if not p:
            return "0"
        terms = []
        for m, c in p.items():
            factors = [n if e == 1 else f"{n}^{e}" for n, e in zip(names, m) if e]
            mag = abs(c)
            body = "*".join(([repr(mag)] if mag != 1 or not factors else []) + factors)
            terms.append(("- " if c < 0 else "+ ") + body)
        s = " ".join(terms)
        return s[2:] if s.startswith("+ ") else "-" + s[2:]

    lines = ["[system]", "states = " + ", ".join(names)]
    for prefix, field_ in (("f", system.f), ("g", system.g)):
        for n, row in zip(names, field_.rows):
            lines.append(f"{prefix}.{n} = {poly_str(row)}")
    out = {tuple(int(j == i) for j in range(len(names))): v for i, v in enumerate(system.c) if v}
    lines.append(f"output = {poly_str(out)}")
    if op is not None:
        lines += ["", "[operating_point]", "x0 = " + ", ".join(repr(v) for v in op.x0),
                  f"u0 = {op.u0!r}", f"residual_tolerance = {op.residual_tolerance!r}"]
    return "\n".join(lines) + "\n"


__all__ = [
    "SystemConfig", "parse_config", "load_config", "parse_polynomial", "bundled_config", "format_config",
]
