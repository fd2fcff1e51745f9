"""Command line entry point: ``fraclap <subcommand> ...``.

Exit status is 0 on success, 2 when inputs fail validation (including a
requested time step above the CFL bound) and 3 when a computation fails
numerically (stability breach, quadrature or fixed-point failure).
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys

import numpy as np

from .config import ConfigError, parse_config
from .grid import GridFunction
from .harness import (
    FLOAT_FMT,
    PRESETS,
    observed_orders,
    read_report_csv,
    run_experiment,
    write_solution_csv,
)
from .operators import apply_fractional_field
from .stepping import solve
from .weights import limit_table, weights_1d, weights_nd

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3

logger = logging.getLogger("fraclap")


def _weights(args) -> None:
    if args.dim == 1:
        table = weights_1d(args.sigma, args.h, args.radius, tail=args.tail)
    else:
        table = weights_nd(args.sigma, args.h, args.dim, args.radius)
    R = table.radius
    header = ["j"] if args.dim == 1 else [f"j{k + 1}" for k in range(args.dim)]
    with _open_out(args.out) as fh:
        fh.write(",".join([*header, "kappa"]) + "\n")
        for idx in np.ndindex(table.kernel.shape):
            j = [i - R for i in idx]
            if any(j):
                fh.write(",".join([*map(str, j), FLOAT_FMT % table.kernel[idx]]) + "\n")
        fh.write(f"DIAGONAL_MASS,{FLOAT_FMT % table.diagonal_mass}\n")


def read_grid_csv(path, h: float) -> GridFunction:
    """Grid function from rows ``x[,y],u`` covering a full uniform grid of spacing h."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [c.strip() for c in next(reader, [])]
        rows = [r for r in reader if r]
    if not header or header[-1] != "u" or header[:-1] not in (["x"], ["x", "y"], ["x", "y", "z"]):
        raise ValueError(f"{path}: header must be x[,y],u")
    try:
        data = np.array(rows, dtype=np.float64)
    except ValueError:
        raise ValueError(f"{path}: non-numeric entries") from None
    if data.ndim != 2 or data.shape[1] != len(header):
        raise ValueError(f"{path}: ragged rows")
    dim = len(header) - 1
    bounds, index = [], []
    for k in range(dim):
        a, b = float(data[:, k].min()), float(data[:, k].max())
        r = (data[:, k] - a) / h
        i = np.rint(r)
        if np.any(np.abs(r - i) > 1e-6):
            raise ValueError(f"{path}: column {header[k]} is not on a grid of spacing {h}")
        bounds.append((a, a + h * round((b - a) / h)))
        index.append(i.astype(np.intp))
    shape = tuple(int(i.max()) + 1 for i in index)
    values = np.full(shape, np.nan)
    values[tuple(index)] = data[:, -1]
    if np.isnan(values).any() or len(data) != values.size:
        raise ValueError(f"{path}: rows do not cover the grid exactly once")
    return GridFunction(tuple(bounds), h, values)


def _apply(args) -> None:
    U = read_grid_csv(args.input, args.h)
    if args.sigma in (0.0, 2.0):
        table = limit_table(args.sigma, args.h, U.dim)
    elif U.dim == 1:
        table = weights_1d(args.sigma, args.h, max(U.shape) - 1, tail=args.tail)
    else:
        table = weights_nd(args.sigma, args.h, U.dim, max(U.shape) - 1)
    V = apply_fractional_field(table, U, method=args.method)
    names = ["x", "y", "z"][: V.dim]
    grids = V.coords()
    with _open_out(args.out) as fh:
        fh.write(",".join([*names, "u"]) + "\n")
        np.savetxt(fh, np.column_stack([g.ravel() for g in grids] + [V.values.ravel()]),
                   fmt=FLOAT_FMT, delimiter=",")


def _solve(args) -> None:
    desc = parse_config(args.config)
    traj = solve(desc.problem(), desc.scheme_config())
    write_solution_csv(args.out, list(zip(traj.times, traj.snapshots)))
    logger.info("%d steps, tau = %.6e, CFL bound %.6e", traj.steps, traj.tau, traj.cfl_bound)


def _parse_override(text: str):
    key, sep, value = text.partition("=")
    if not sep:
        raise ValueError(f"override {text!r} must look like key=value")
    parts = [p for p in value.replace(",", " ").split()]
    try:
        nums = [float(p) for p in parts]
    except ValueError:
        return key.strip(), value.strip()
    return key.strip(), nums[0] if len(nums) == 1 else tuple(nums)


def _experiment(args) -> None:
    overrides = dict(_parse_override(s) for s in args.set)
    result = run_experiment(args.preset, overrides, paper_scale=args.paper_scale, out=args.out)
    print(result.report.table())
    checks = result.report.metadata.get("checks")
    if checks:
        for key in sorted(checks):
            print(f"{key}: {checks[key]}")
    print(f"elapsed: {result.elapsed:.1f} s")


def _rates(args) -> None:
    params, errors = read_report_csv(args.input)
    rates = [None, *observed_orders(errors)] if len(errors) > 1 else [None] * len(errors)
    with _open_out(args.out) as fh:
        fh.write("param,rel_error,rate\n")
        for p, e, r in zip(params, errors, rates):
            fh.write(f"{FLOAT_FMT % p},{FLOAT_FMT % e},{'' if r is None else FLOAT_FMT % r}\n")


class _open_out:
    """Context manager writing to a file, or to stdout for ``-`` / None."""

    def __init__(self, path):
        self.path = path

    def __enter__(self):
        if self.path in (None, "-"):
            return sys.stdout
        self.fh = open(self.path, "w", newline="")
        return self.fh

    def __exit__(self, *exc):
        if self.path not in (None, "-"):
            self.fh.close()
        return False


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fraclap", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    w = sub.add_parser("weights", help="quadrature weights of the discrete fractional Laplacian")
    w.add_argument("--sigma", type=float, required=True)
    w.add_argument("--h", type=float, required=True)
    w.add_argument("--radius", type=int, required=True)
    w.add_argument("--dim", type=int, default=1)
    w.add_argument("--tail", choices=("zeta", "exact", "none"), default="zeta",
                   help="1d far-field mass rule (default: zeta)")
    w.add_argument("--out", default="-")
    w.set_defaults(func=_weights)

    a = sub.add_parser("apply", help="apply -(-Delta_h)^(sigma/2) to a grid function")
    a.add_argument("--sigma", type=float, required=True)
    a.add_argument("--h", type=float, required=True)
    a.add_argument("--in", dest="input", required=True, help="CSV with columns x[,y],u")
    a.add_argument("--out", required=True)
    a.add_argument("--tail", choices=("zeta", "exact", "none"), default="zeta")
    a.add_argument("--method", choices=("auto", "direct", "fft"), default="auto")
    a.set_defaults(func=_apply)

    s = sub.add_parser("solve", help="run a scheme described by a key = value config file")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_solve)

    e = sub.add_parser("experiment", help="run a convergence/figure preset")
    e.add_argument("preset", choices=sorted(PRESETS))
    e.add_argument("--paper-scale", action="store_true")
    e.add_argument("--out", default=None, help="directory for the report and solution CSVs")
    e.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a preset parameter (repeatable)")
    e.set_defaults(func=_experiment)

    r = sub.add_parser("rates", help="recompute observed orders of a param,rel_error CSV")
    r.add_argument("--in", dest="input", required=True)
    r.add_argument("--out", default="-")
    r.set_defaults(func=_rates)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except ArithmeticError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ValueError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
