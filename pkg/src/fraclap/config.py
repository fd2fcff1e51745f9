"""Plain-text run configuration (``key = value`` lines).

Keys
----
sigma            order(s) in (0, 2); comma list for several diffusion terms   [required]
h                grid spacing                                                [required]
scheme           explicit | theta | convection | multidiffusion | isaacs    [required]
t_final          final time                                                  [required]
domain           box bounds, "a b" per axis, e.g. "-20 20" or "-10 10 -10 10"
nonlinearity     F1 | F2 | F3; comma list matching sigma
axes             axis groups per diffusion term, ";"-separated, e.g. "0;1"
initial          g1 | g2 | g3 | g1_radial_2d
theta            theta-scheme parameter in [0, 1]
tau_rule         auto | h | h^2 | <number>
safety           fraction of the CFL bound used by tau_rule = auto
snapshot_times   comma list of output times
velocity         transport velocity per axis (convection scheme), H(p) = v.p
controls         CSV of controlled coefficients (isaacs scheme)
fp_tolerance     fixed-point tolerance (theta scheme)
fp_max_iters     fixed-point iteration cap (theta scheme)
cfl_override     true | false
theta_cfl        sigma | 2sigma  (exponent of h in the theta-scheme bound)
tail             zeta | exact | none  (1d weight tail rule)

Everything after ``#`` on a line is a comment; blank lines are ignored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path
from types import SimpleNamespace

from .grid import grid_points
from .problems import builtin_initial, builtin_nonlinearity, load_coefficients_csv, transport_hamiltonian
from .stepping import SCHEMES, DiffusionTerm, Problem, SchemeConfig

__all__ = ["ConfigError", "RunDescription", "parse_config", "parse_config_text", "format_config"]


class ConfigError(ValueError):
    def __init__(self, message: str, lineno: int | None = None, path: str | None = None):
        self.lineno = lineno
        where = f"{path or '<config>'}:{lineno}: " if lineno is not None else (f"{path}: " if path else "")
        super().__init__(where + message)


@dataclass(frozen=True)
class RunDescription:
    sigma: tuple[float, ...]
    h: float
    scheme: str
    t_final: float
    domain: tuple[tuple[float, float], ...] = ((-20.0, 20.0),)
    nonlinearity: tuple[str, ...] = ("F3",)
    axes: tuple[tuple[int, ...], ...] | None = None
    initial: str = "g3"
    theta: float = 0.0
    tau_rule: str = "auto"
    safety: float = 0.9
    snapshot_times: tuple[float, ...] = ()
    velocity: tuple[float, ...] | None = None
    controls: str | None = None
    fp_tolerance: float | None = None
    fp_max_iters: int = 200
    cfl_override: bool = False
    theta_cfl: str = "sigma"
    tail: str = "zeta"

    @property
    def dim(self) -> int:
        return len(self.domain)

    def problem(self) -> Problem:
        if self.scheme == "isaacs":
            if self.controls is None:
                raise ConfigError("scheme = isaacs needs 'controls'")
            if len(self.sigma) != 1:
                raise ConfigError("scheme = isaacs takes a single sigma")
            grid = SimpleNamespace(
                bounds=self.domain, h=self.h, shape=tuple(grid_points(a, b, self.h) for a, b in self.domain)
            )
            ctl = load_coefficients_csv(self.controls, self.sigma[0], grid)
            return Problem(self.domain, self.h, builtin_initial(self.initial), (), controls=ctl, tail=self.tail)
        F = self.nonlinearity
        if len(F) == 1 and len(self.sigma) > 1:
            F = F * len(self.sigma)
        if len(F) != len(self.sigma):
            raise ConfigError("nonlinearity list must match sigma list")
        axes = self.axes or (None,) * len(self.sigma)
        if len(axes) != len(self.sigma):
            raise ConfigError("axes list must match sigma list")
        terms = tuple(DiffusionTerm(s, builtin_nonlinearity(f), a) for s, f, a in zip(self.sigma, F, axes))
        H = transport_hamiltonian(self.velocity) if self.velocity is not None else None
        return Problem(self.domain, self.h, builtin_initial(self.initial), terms, hamiltonian=H, tail=self.tail)

    def scheme_config(self) -> SchemeConfig:
        tau = None
        if self.tau_rule == "h":
            tau = self.h
        elif self.tau_rule in ("h^2", "h2"):
            tau = self.h**2
        elif self.tau_rule != "auto":
            tau = float(self.tau_rule)
        return SchemeConfig(
            t_final=self.t_final, scheme=self.scheme, theta=self.theta, tau=tau, safety=self.safety,
            fp_tolerance=self.fp_tolerance, fp_max_iters=self.fp_max_iters,
            cfl_override=self.cfl_override, printed_theta_exponent=self.theta_cfl == "2sigma",
            snapshot_times=self.snapshot_times,
        )


REQUIRED = ("sigma", "h", "scheme", "t_final")


def _floats(v: str) -> tuple[float, ...]:
    return tuple(float(p) for p in v.replace(",", " ").split())


def _bool(v: str) -> bool:
    low = v.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected a boolean, got {v!r}")


def _domain(v: str):
    vals = _floats(v)
    if len(vals) % 2 or not vals:
        raise ValueError("domain needs pairs 'a b' per axis")
    return tuple((vals[i], vals[i + 1]) for i in range(0, len(vals), 2))


def _axes(v: str):
    return tuple(tuple(int(p) for p in grp.replace(",", " ").split()) for grp in v.split(";"))


def _tau_rule(v: str) -> str:
    v = v.strip()
    if v in ("auto", "h", "h^2", "h2"):
        return v
    if not float(v) > 0:
        raise ValueError("explicit tau must be positive")
    return v


_PARSERS = {
    "sigma": _floats,
    "h": float,
    "scheme": str.strip,
    "t_final": float,
    "domain": _domain,
    "nonlinearity": lambda v: tuple(p.strip() for p in v.split(",")),
    "axes": _axes,
    "initial": str.strip,
    "theta": float,
    "tau_rule": _tau_rule,
    "safety": float,
    "snapshot_times": _floats,
    "velocity": _floats,
    "controls": str.strip,
    "fp_tolerance": float,
    "fp_max_iters": int,
    "cfl_override": _bool,
    "theta_cfl": str.strip,
    "tail": str.strip,
}

_CHECKS = {
    "scheme": lambda v: v in SCHEMES,
    "h": lambda v: v > 0 and math.isfinite(v),
    "t_final": lambda v: v >= 0,
    "theta": lambda v: 0 <= v <= 1,
    "safety": lambda v: 0 < v <= 1,
    "theta_cfl": lambda v: v in ("sigma", "2sigma"),
    "tail": lambda v: v in ("zeta", "exact", "none"),
    "initial": lambda v: v in ("g1", "g2", "g3", "g1_radial_2d"),
    "nonlinearity": lambda v: all(f in ("F1", "F2", "F3") for f in v),
    "sigma": lambda v: len(v) > 0 and all(0 <= s <= 2 for s in v),
    "fp_max_iters": lambda v: v > 0,
}


def parse_config_text(text: str, path: str | None = None, base_dir: Path | None = None) -> RunDescription:
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw!r}", lineno, path)
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in _PARSERS:
            raise ConfigError(f"unknown key {key!r}", lineno, path)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", lineno, path)
        try:
            parsed = _PARSERS[key](val)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", lineno, path) from None
        check = _CHECKS.get(key)
        if check is not None and not check(parsed):
            raise ConfigError(f"invalid value for {key!r}: {val.strip()!r}", lineno, path)
        values[key] = parsed
    missing = [k for k in REQUIRED if k not in values]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}", None, path)
    if "controls" in values and base_dir is not None and not Path(values["controls"]).is_absolute():
        values["controls"] = str(base_dir / values["controls"])
    desc = RunDescription(**values)
    try:
        for a, b in desc.domain:
            grid_points(a, b, desc.h)
    except ValueError as exc:
        raise ConfigError(str(exc), None, path) from None
    return desc


def parse_config(path) -> RunDescription:
    path = Path(path)
    return parse_config_text(path.read_text(), str(path), path.parent)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        if v and isinstance(v[0], tuple):
            if all(len(p) == 2 and isinstance(p[0], float) for p in v):
                return " ".join(f"{a!r} {b!r}" for a, b in v)
            return ";".join(" ".join(str(i) for i in grp) for grp in v)
        return ", ".join(_fmt(p) for p in v)
    return str(v)


def format_config(desc: RunDescription) -> str:
    """Text that ``parse_config_text`` turns back into ``desc``."""
    lines = []
    for f in fields(desc):
        v = getattr(desc, f.name)
        if v is None or (v == () and f.name == "snapshot_times"):
            continue
        lines.append(f"{f.name} = {_fmt(v)}")
    return "\n".join(lines) + "\n"
