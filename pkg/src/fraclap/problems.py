"""Nonlinearities, Hamiltonians, initial data, controlled coefficients and
exact solutions used by the schemes and the experiment presets."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Nonlinearity",
    "Hamiltonian",
    "ControlledCoefficients",
    "ExactSolution",
    "builtin_nonlinearity",
    "builtin_initial",
    "exact_linear_sigma1",
    "transport_hamiltonian",
    "load_coefficients_csv",
    "NONLINEARITIES",
    "INITIAL_DATA",
]


@dataclass(frozen=True)
class Nonlinearity:
    """Nondecreasing Lipschitz F with F(l1) - F(l2) <= L_F (l1 - l2)^+."""

    name: str
    func: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    L_F: float
    F0: float = 0.0

    def __call__(self, l):
        return self.func(l)


def _F1(l):
    return np.maximum(0.0, l)


def _F2(l):
    return np.maximum(0.5 * l, l)


def _F3(l):
    return np.asarray(l, dtype=np.float64) * 1.0


NONLINEARITIES = {
    "F1": Nonlinearity("F1", _F1, 1.0, 0.0),
    "F2": Nonlinearity("F2", _F2, 1.0, 0.0),
    "F3": Nonlinearity("F3", _F3, 1.0, 0.0),
}


def builtin_nonlinearity(name: str) -> Nonlinearity:
    """F1(l) = max(0, l), F2(l) = max(l/2, l), F3(l) = l; all with L_F = 1."""
    try:
        return NONLINEARITIES[name]
    except KeyError:
        raise ValueError(f"unknown nonlinearity {name!r}; choose from {sorted(NONLINEARITIES)}") from None


@dataclass(frozen=True)
class Hamiltonian:
    """H(p) with p of shape (N, ...); ``lipschitz`` holds ||d_k H||_inf per axis."""

    name: str
    func: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    lipschitz: tuple[float, ...]

    def __call__(self, p):
        return self.func(p)

    @property
    def viscosity(self) -> tuple[float, ...]:
        """Lax-Friedrichs coefficients L_H^k = ||d_k H||_inf / 2."""
        return tuple(0.5 * v for v in self.lipschitz)


def transport_hamiltonian(velocity: Sequence[float]) -> Hamiltonian:
    """H(p) = v . p, giving u_t + v . grad u = 0."""
    v = np.asarray(velocity, dtype=np.float64)

    def H(p):
        return np.tensordot(v, p, axes=(0, 0))

    return Hamiltonian(f"transport{tuple(v)}", H, tuple(float(abs(c)) for c in v))


def g1(x):
    x = np.asarray(x, dtype=np.float64)
    inside = (x > -2) & (x < 2)
    val = 0.75 * np.sin(np.pi * (x + 1.5)) - 0.5 * np.sin(0.5 * np.pi * (x + 1)) + 0.25
    return np.where(inside, val, 0.0)


def g2(x):
    x = np.asarray(x, dtype=np.float64)
    ax = np.abs(x)
    return np.where(ax < 1, 2 * ax - 1, np.where(ax < 2, 2 - ax, 0.0))


def g3(x):
    x = np.asarray(x, dtype=np.float64)
    return 1.0 / (1.0 + x * x)


def g1_radial_2d(x, y):
    return g1(np.hypot(x, y))


INITIAL_DATA = {"g1": g1, "g2": g2, "g3": g3, "g1_radial_2d": g1_radial_2d}


def builtin_initial(name: str) -> Callable:
    try:
        return INITIAL_DATA[name]
    except KeyError:
        raise ValueError(f"unknown initial datum {name!r}; choose from {sorted(INITIAL_DATA)}") from None


@dataclass(frozen=True)
class ExactSolution:
    func: Callable = field(repr=False)
    sigma: float
    nonlinearity: str
    initial: str

    def __call__(self, x, t):
        return self.func(x, t)


def exact_linear_sigma1() -> ExactSolution:
    """u(x, t) = (t + 1) / ((t + 1)^2 + x^2), solving u_t = -(-Delta)^(1/2) u, u(0) = g3."""

    def u(x, t):
        x = np.asarray(x, dtype=np.float64)
        s = t + 1.0
        return s / (s * s + x * x)

    return ExactSolution(u, 1.0, "F3", "g3")


@dataclass(frozen=True)
class ControlledCoefficients:
    """Coefficient fields of the Isaacs operator over finite control sets.

    Each of ``a``, ``c``, ``f`` is called as ``a(alpha, beta, t, *x)`` and
    returns an array on the grid (scalars broadcast); ``b`` returns a sequence
    with one drift component per axis.  ``alphas`` and ``betas`` are the
    finite samples of the control sets; ``K`` bounds the coefficients.
    """

    alphas: tuple
    betas: tuple
    a: Callable
    b: Callable
    c: Callable
    f: Callable
    K: float
    sigma: float

    def __post_init__(self):
        if not self.alphas or not self.betas:
            raise ValueError("control sets must be nonempty")
        object.__setattr__(self, "alphas", tuple(self.alphas))
        object.__setattr__(self, "betas", tuple(self.betas))

    @classmethod
    def constant(cls, sigma, table, K=None):
        """Coefficients from a table {(alpha, beta): (a, b, c, f)} of constants
        (or grid arrays).  ``b`` may be a scalar in 1d or a sequence."""
        alphas = tuple(dict.fromkeys(k[0] for k in table))
        betas = tuple(dict.fromkeys(k[1] for k in table))

        def pick(pos):
            def fn(alpha, beta, t, *x):
                return table[(alpha, beta)][pos]
            return fn

        def bfn(alpha, beta, t, *x):
            b = table[(alpha, beta)][1]
            return tuple(b) if isinstance(b, (list, tuple)) else (b,)

        if K is None:
            K = 0.0
            for a, b, c, f in table.values():
                bmax = max(float(np.max(np.abs(bk))) for bk in (b if isinstance(b, (list, tuple)) else (b,)))
                K = max(K, float(np.max(np.abs(a))) ** (1.0 / sigma), bmax,
                        float(np.max(np.abs(c))), float(np.max(np.abs(f))))
        return cls(alphas, betas, pick(0), bfn, pick(2), pick(3), float(K), float(sigma))


def load_coefficients_csv(path, sigma: float, grid, K: float | None = None) -> ControlledCoefficients:
    """Read coefficient fields from CSV.

    Columns: ``alpha_idx,beta_idx,x[,y...],a,b1[,b2...],c,f`` with one row per
    control pair and grid node.  Every (alpha_idx, beta_idx) pair must cover
    every node of ``grid`` (a GridFunction or anything with ``bounds``, ``h``
    and ``shape``).
    """
    import csv

    dim = len(grid.shape)
    xcols = ["x", "y", "z"][:dim] if dim <= 3 else [f"x{k}" for k in range(dim)]
    bcols = [f"b{k + 1}" for k in range(dim)]
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        need = ["alpha_idx", "beta_idx", *xcols, "a", *bcols, "c", "f"]
        missing = [c for c in need if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"{path}: missing columns {missing}")
        fields: dict = {}
        for lineno, row in enumerate(reader, start=2):
            key = (int(row["alpha_idx"]), int(row["beta_idx"]))
            if key not in fields:
                fields[key] = {n: np.full(grid.shape, np.nan) for n in ["a", *bcols, "c", "f"]}
            idx = []
            for k, col in enumerate(xcols):
                a0 = grid.bounds[k][0]
                r = (float(row[col]) - a0) / grid.h
                i = round(r)
                if abs(r - i) > 1e-6 or not 0 <= i < grid.shape[k]:
                    raise ValueError(f"{path}:{lineno}: {col}={row[col]} is not a grid node")
                idx.append(int(i))
            for n in fields[key]:
                fields[key][n][tuple(idx)] = float(row[n])
    table = {}
    for key, arrs in fields.items():
        if any(np.isnan(v).any() for v in arrs.values()):
            raise ValueError(f"{path}: control pair {key} does not cover every grid node")
        if np.any(arrs["a"] < 0) or np.any(arrs["c"] < 0):
            raise ValueError(f"{path}: control pair {key} has negative a or c")
        table[key] = (arrs["a"], tuple(arrs[b] for b in bcols), arrs["c"], arrs["f"])
    return ControlledCoefficients.constant(sigma, table, K)
