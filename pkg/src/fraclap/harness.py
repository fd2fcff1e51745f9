"""Convergence studies: relative errors on inner windows, observed orders, CSV reports.

Each preset reproduces one of the numerical experiments (1a, 1b, 2, 3, 4a, 4b).
Presets default to a desk-scale configuration that runs in seconds to minutes;
``paper_scale=True`` switches to the full published domains and refinements.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .grid import GridFunction
from .problems import builtin_initial, builtin_nonlinearity, exact_linear_sigma1
from .stepping import DiffusionTerm, Problem, SchemeConfig, Trajectory, solve

__all__ = [
    "ErrorReport",
    "ExperimentResult",
    "PRESETS",
    "relative_linf_error",
    "restrict_to",
    "observed_orders",
    "run_experiment",
    "emit_csv",
    "read_report_csv",
    "write_solution_csv",
    "preset_parameters",
]

logger = logging.getLogger(__name__)

FLOAT_FMT = "%.16e"


# -- errors and orders ----------------------------------------------------------

def restrict_to(ref: GridFunction, U: GridFunction, window=None) -> np.ndarray:
    """Values of ``ref`` at the nodes of ``U`` (inside ``window`` when given).

    ``ref`` must live on a grid that contains every requested node of ``U``,
    e.g. a dyadic refinement of it.
    """
    if ref.dim != U.dim:
        raise ValueError("reference and solution have different dimensions")
    window = U.bounds if window is None else window
    index = []
    for k in range(U.dim):
        x = U.axis(k)
        lo, hi = window[k]
        x = x[(x >= lo - 1e-9 * U.h) & (x <= hi + 1e-9 * U.h)]
        r = (x - ref.bounds[k][0]) / ref.h
        i = np.rint(r)
        if np.any(np.abs(r - i) > 1e-6) or np.any(i < 0) or np.any(i >= ref.shape[k]):
            raise ValueError(f"reference grid does not contain the solution nodes on axis {k}")
        index.append(i.astype(np.intp))
    return ref.values[np.ix_(*index)]


def relative_linf_error(U: GridFunction, Uref, window: Sequence[Sequence[float]] | None = None) -> float:
    """sup|U - Uref| / sup|Uref| over the nodes of U inside ``window``.

    ``Uref`` is a GridFunction on the same or a nested finer grid, or a callable
    evaluated at U's nodes (``Uref(x)`` in 1d, ``Uref(x, y)`` in 2d).
    """
    window = U.bounds if window is None else tuple(tuple(w) for w in window)
    mask = U.window_mask(window)
    if not mask.any():
        raise ValueError("window contains no grid nodes")
    u = U.values[mask]
    if isinstance(Uref, GridFunction):
        ref = restrict_to(Uref, U, window).ravel()
    elif callable(Uref):
        coords = U.coords()
        ref = np.broadcast_to(np.asarray(Uref(*coords), dtype=np.float64), U.shape)[mask]
    else:
        raise TypeError("reference must be a GridFunction or a callable")
    scale = float(np.max(np.abs(ref)))
    if scale == 0.0:
        raise ValueError("reference vanishes identically on the window")
    return float(np.max(np.abs(u - ref))) / scale


def observed_orders(errors: Sequence[float], params: Sequence[float] | None = None) -> list[float]:
    """log2(e_{i-1}/e_i) for each consecutive pair.

    With ``params`` given the ratio of consecutive parameters replaces 2, which
    reduces to the halving convention when they halve.
    """
    e = np.asarray(errors, dtype=np.float64)
    if e.size < 2:
        raise ValueError("need at least two errors")
    if np.any(~(e > 0)) or not np.all(np.isfinite(e)):
        raise ValueError("errors must be positive and finite")
    ratios = np.log(e[:-1] / e[1:])
    if params is None:
        return list(ratios / math.log(2.0))
    p = np.asarray(params, dtype=np.float64)
    if p.shape != e.shape or np.any(~(p > 0)):
        raise ValueError("params must be positive and match errors")
    step = np.log(p[:-1] / p[1:])
    if np.any(step == 0):
        raise ValueError("consecutive parameters must differ")
    return list(ratios / step)


@dataclass
class ErrorReport:
    """Rows of (parameter, relative error, rate) plus run metadata."""

    param_name: str
    params: list[float] = field(default_factory=list)
    errors: list[float] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def rates(self) -> list[float | None]:
        if len(self.errors) < 2:
            return [None] * len(self.errors)
        return [None, *observed_orders(self.errors)]

    def rows(self):
        return list(zip(self.params, self.errors, self.rates))

    def table(self) -> str:
        lines = [f"{self.param_name:>10}  {'rel. error':>10}  {'rate':>5}"]
        for p, e, r in self.rows():
            lines.append(f"{p:10.3e}  {e:10.3e}  {'--' if r is None else format(r, '.2f'):>5}")
        return "\n".join(lines)


def emit_csv(report: ErrorReport, path) -> Path:
    """Write ``param,rel_error,rate`` rows and a ``.json`` sidecar with the metadata."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["param", "rel_error", "rate"])
        for p, e, r in report.rows():
            w.writerow([FLOAT_FMT % p, FLOAT_FMT % e, "" if r is None else FLOAT_FMT % r])
    meta = {"param_name": report.param_name, **report.metadata}
    path.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return path


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"cannot serialise {type(v).__name__}")


def read_report_csv(path) -> tuple[list[float], list[float]]:
    """(params, errors) from a CSV with ``param`` and ``rel_error`` columns."""
    params, errors = [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"param", "rel_error"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected columns 'param' and 'rel_error'")
        for lineno, row in enumerate(reader, start=2):
            try:
                params.append(float(row["param"]))
                errors.append(float(row["rel_error"]))
            except (TypeError, ValueError):
                raise ValueError(f"{path}:{lineno}: malformed row") from None
    return params, errors


def write_solution_csv(path, snapshots: Sequence[tuple[float, GridFunction]]) -> Path:
    """Rows ``t,x[,y],u`` for each (time, field) pair, C-ordered over the grid."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        if not snapshots:
            raise ValueError("no snapshots to write")
        dim = snapshots[0][1].dim
        names = ["x", "y", "z"][:dim] if dim <= 3 else [f"x{k}" for k in range(dim)]
        fh.write(",".join(["t", *names, "u"]) + "\n")
        for t, U in snapshots:
            grids = U.coords()
            cols = [np.full(U.values.size, t)] + [g.ravel() for g in grids] + [U.values.ravel()]
            np.savetxt(fh, np.column_stack(cols), fmt=FLOAT_FMT, delimiter=",")
    return path


# -- presets --------------------------------------------------------------------

SIGMA_SWEEP = (0.1, 0.05, 0.025, 0.0125, 0.00625)

_DESK = {
    "exp1a": dict(h=2.0**-5, domain=(-20.0, 20.0), t_final=0.5, sigmas=(0.5, 1.0, 1.5),
                  initials=("g1", "g2"), safety=0.9),
    "exp1b": dict(h=2.0**-5, domain=(-20.0, 20.0), times=(0.25, 0.5, 1.0, 2.0),
                  sigmas=(1.0, 1.5, 2.0), initial="g2", safety=0.9),
    "exp2": dict(h=2.0**-3, domain=(-10.0, 10.0), t_final=1.0, safety=0.9),
    "exp3_sigma0": dict(h=2.0**-5, domain=(-20.0, 20.0), window=(-10.0, 10.0), t_final=1.0,
                        sweep=SIGMA_SWEEP, safety=0.9),
    "exp3_sigma2": dict(h=2.0**-5, domain=(-20.0, 20.0), window=(-10.0, 10.0), t_final=1.0,
                        sweep=SIGMA_SWEEP, safety=0.9),
    "exp4a_tau_h": dict(hs=tuple(2.0**-k for k in range(1, 5)), domain=(-200.0, 200.0),
                        window=(-50.0, 50.0), t_final=1.0),
    "exp4a_tau_h2": dict(hs=tuple(2.0**-k for k in range(1, 5)), domain=(-200.0, 200.0),
                         window=(-50.0, 50.0), t_final=1.0),
    "exp4b": dict(hs=tuple(2.0**-k for k in range(1, 5)), h_ref=2.0**-5, domain=(-200.0, 200.0),
                  window=(-50.0, 50.0), t_final=1.0),
}

_PAPER = {
    "exp1a": {},
    "exp1b": {},
    "exp2": dict(h=2.0**-5, domain=(-20.0, 20.0)),
    "exp3_sigma0": {},
    "exp3_sigma2": {},
    "exp4a_tau_h": dict(hs=tuple(2.0**-k for k in range(1, 7)), domain=(-5000.0, 5000.0),
                        window=(-500.0, 500.0)),
    "exp4a_tau_h2": dict(hs=tuple(2.0**-k for k in range(1, 7)), domain=(-5000.0, 5000.0),
                         window=(-500.0, 500.0)),
    "exp4b": dict(hs=tuple(2.0**-k for k in range(1, 7)), h_ref=2.0**-7, domain=(-5000.0, 5000.0),
                  window=(-500.0, 500.0)),
}

_COMMON = ("method", "budget")


def preset_parameters(preset: str, paper_scale: bool = False, overrides: dict | None = None) -> dict:
    """Resolved parameters of ``preset`` after scale selection and overrides."""
    if preset not in _DESK:
        raise ValueError(f"unknown preset {preset!r}; choose from {sorted(_DESK)}")
    params = {"method": "auto", "budget": None, **_DESK[preset]}
    if paper_scale:
        params.update(_PAPER[preset])
    for key, value in (overrides or {}).items():
        if key not in params:
            raise ValueError(f"preset {preset!r} has no parameter {key!r}; known: {sorted(params)}")
        params[key] = tuple(value) if isinstance(value, list) else value
    return params


@dataclass
class ExperimentResult:
    report: ErrorReport
    solutions: dict[str, list[tuple[float, GridFunction]]]
    elapsed: float
    budget_exceeded: bool = False


def _run(problem: Problem, config: SchemeConfig) -> Trajectory:
    traj = solve(problem, config)
    logger.debug("ran %d steps with tau=%.3e", traj.steps, traj.tau)
    return traj


def _snaps(traj: Trajectory):
    return list(zip(traj.times, traj.snapshots))


def _monotone_in_time(traj: Trajectory) -> bool:
    return all(np.all(b.values >= a.values) for a, b in zip(traj.snapshots, traj.snapshots[1:]))


def _exp1a(p, report, sols):
    F1 = builtin_nonlinearity("F1")
    bounds = (tuple(p["domain"]),)
    checks = {}
    for name in p["initials"]:
        for s in p["sigmas"]:
            prob = Problem(bounds, p["h"], builtin_initial(name), (DiffusionTerm(s, F1),), method=p["method"])
            traj = _run(prob, SchemeConfig(p["t_final"], safety=p["safety"], snapshot_times=(0.0,)))
            label = f"{name}_sigma{s:g}"
            sols[label] = _snaps(traj)
            U = traj.final
            if name == "g2":
                peaks = [U.values[U.index_of(x)] for x in (-1.0, 1.0)]
                checks[f"{label}_peak_deviation"] = float(max(abs(v - 1.0) for v in peaks))
            checks[f"{label}_monotone_in_time"] = _monotone_in_time(traj)
    report.metadata["checks"] = checks


def _exp1b(p, report, sols):
    F1 = builtin_nonlinearity("F1")
    bounds = (tuple(p["domain"]),)
    checks = {}
    times = tuple(p["times"])
    for s in p["sigmas"]:
        prob = Problem(bounds, p["h"], builtin_initial(p["initial"]), (DiffusionTerm(s, F1),), method=p["method"])
        traj = _run(prob, SchemeConfig(max(times), safety=p["safety"], snapshot_times=(0.0, *times)))
        label = f"sigma{s:g}"
        sols[label] = _snaps(traj)
        checks[f"{label}_monotone_in_time"] = _monotone_in_time(traj)
    report.metadata["checks"] = checks


def _exp2(p, report, sols):
    a, b = p["domain"]
    bounds = ((a, b), (a, b))
    terms = (DiffusionTerm(1.0, builtin_nonlinearity("F1"), (0,)),
             DiffusionTerm(1.0, builtin_nonlinearity("F2"), (1,)))
    prob = Problem(bounds, p["h"], builtin_initial("g1_radial_2d"), terms, method=p["method"])
    traj = _run(prob, SchemeConfig(p["t_final"], scheme="multidiffusion", safety=p["safety"],
                                   snapshot_times=(0.0,)))
    sols["2d"] = _snaps(traj)
    V = traj.final.values
    report.metadata["checks"] = {
        "x_reflection": float(np.max(np.abs(V - V[::-1, :]))),
        "y_reflection": float(np.max(np.abs(V - V[:, ::-1]))),
        "xy_asymmetry": float(np.max(np.abs(V - V.T))),
    }


def _limit_reference(p, sigma_limit: float) -> GridFunction:
    """Same scheme with the limit operator (discrete Laplacian or -Id)."""
    prob = Problem((tuple(p["domain"]),), p["h"], builtin_initial("g2"),
                   (DiffusionTerm(sigma_limit, builtin_nonlinearity("F1")),), method="direct")
    return _run(prob, SchemeConfig(p["t_final"], safety=p["safety"])).final


def _exp3(p, report, sols, side: str):
    F1 = builtin_nonlinearity("F1")
    bounds = (tuple(p["domain"]),)
    window = (tuple(p["window"]),)
    ref = _limit_reference(p, 0.0 if side == "sigma0" else 2.0)
    sols["reference"] = [(p["t_final"], ref)]
    for d in p["sweep"]:
        s = d if side == "sigma0" else 2.0 - d
        prob = Problem(bounds, p["h"], builtin_initial("g2"), (DiffusionTerm(s, F1),), method=p["method"])
        traj = _run(prob, SchemeConfig(p["t_final"], safety=p["safety"]))
        sols[f"sigma{s:g}"] = _snaps(traj)[-1:]
        report.params.append(d)
        report.errors.append(relative_linf_error(traj.final, ref, window))


def _exp4(p, report, sols, variant: str):
    bounds = (tuple(p["domain"]),)
    window = (tuple(p["window"]),)
    T = p["t_final"]
    name = "F2" if variant == "b" else "F3"
    term = (DiffusionTerm(1.0, builtin_nonlinearity(name)),)

    def run(h, tau, override=False):
        prob = Problem(bounds, h, builtin_initial("g3"), term, method=p["method"])
        return _run(prob, SchemeConfig(T, tau=tau, cfl_override=override)).final

    if variant == "b":
        ref = run(p["h_ref"], p["h_ref"] ** 2)
        report.metadata["reference_h"] = p["h_ref"]
    else:
        exact = exact_linear_sigma1()

        def ref(x):
            return exact(x, T)

    for h in p["hs"]:
        # tau = h sits above the monotonicity bound h / C_1 (C_1 = 4/pi); the
        # linear scheme is still L2-stable there, so the sweep runs unguarded.
        U = run(h, h, override=True) if variant == "tau_h" else run(h, h * h)
        sols[f"h{h:g}"] = [(T, U)]
        report.params.append(h)
        report.errors.append(relative_linf_error(U, ref, window))


PRESETS: dict[str, tuple[str, Callable]] = {
    "exp1a": ("sigma", _exp1a),
    "exp1b": ("sigma", _exp1b),
    "exp2": ("h", _exp2),
    "exp3_sigma0": ("sigma", lambda p, r, s: _exp3(p, r, s, "sigma0")),
    "exp3_sigma2": ("2-sigma", lambda p, r, s: _exp3(p, r, s, "sigma2")),
    "exp4a_tau_h": ("h", lambda p, r, s: _exp4(p, r, s, "tau_h")),
    "exp4a_tau_h2": ("h", lambda p, r, s: _exp4(p, r, s, "tau_h2")),
    "exp4b": ("h", lambda p, r, s: _exp4(p, r, s, "b")),
}


def run_experiment(preset: str, overrides: dict | None = None, paper_scale: bool = False,
                   out=None) -> ExperimentResult:
    """Run a preset sweep; with ``out`` given, write ``<preset>.csv`` and solution CSVs there."""
    params = preset_parameters(preset, paper_scale, overrides)
    param_name, runner = PRESETS[preset]
    meta = {"preset": preset, "paper_scale": paper_scale,
            **{k: v for k, v in params.items() if k not in _COMMON}}
    report = ErrorReport(param_name, metadata=meta)
    sols: dict = {}
    start = time.perf_counter()
    runner(params, report, sols)
    elapsed = time.perf_counter() - start
    over = params["budget"] is not None and elapsed > params["budget"]
    if over:
        logger.warning("%s took %.1f s, over its %.1f s budget", preset, elapsed, params["budget"])
    result = ExperimentResult(report, sols, elapsed, over)
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        emit_csv(report, out / f"{preset}.csv")
        for label, snaps in sols.items():
            write_solution_csv(out / f"{preset}_{label}.csv", snaps)
    return result
