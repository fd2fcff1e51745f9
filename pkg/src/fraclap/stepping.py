"""Monotone time stepping for fractional HJB/Isaacs equations.

Schemes (U^n -> U^{n+1}, with L = -(-Delta_h)^(sigma/2)):

explicit / multidiffusion
    U + tau [sum_k F_k(L_k U) + f]
theta
    U + tau [sum_k F_k((1 - theta) L_k U + theta L_k U^{n+1}) + f], solved by
    fixed-point iteration
convection
    U + tau [sum_k F_k(L_k U) - H(grad_c U) + h Delta^H U + f]   (Lax-Friedrichs)
isaacs
    U + tau inf_beta sup_alpha {f - c U + a L U + sum_k (b+_k D+_k U + b-_k D-_k U)}
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .cfl import CflInputs, cfl_isaacs, cfl_multidiffusion, cfl_theta
from .grid import GridFunction, grid_points
from .operators import (
    FractionalLaplacian,
    central_gradient_field,
    lf_viscosity_field,
    upwind_fields,
)
from .problems import ControlledCoefficients, Hamiltonian, Nonlinearity
from .weights import limit_table, weights_1d, weights_nd

__all__ = [
    "DiffusionTerm",
    "Problem",
    "SchemeConfig",
    "Trajectory",
    "CflViolation",
    "NumericalError",
    "FixedPointError",
    "SCHEMES",
    "discretize",
    "max_time_step",
    "step_explicit",
    "step_theta",
    "step_convection",
    "step_isaacs",
    "step_linear",
    "solve",
]

logger = logging.getLogger(__name__)

SCHEMES = ("explicit", "theta", "convection", "multidiffusion", "isaacs")


class CflViolation(ValueError):
    """Requested time step exceeds the monotonicity bound."""


class NumericalError(ArithmeticError):
    """Non-finite values or a violated stability bound during time stepping."""

    def __init__(self, message: str, step: int | None = None):
        self.step = step
        super().__init__(message if step is None else f"step {step}: {message}")


class FixedPointError(NumericalError):
    """The implicit relation of the theta scheme was not solved to tolerance."""

    def __init__(self, message: str, residual: float, step: int | None = None):
        self.residual = residual
        super().__init__(message, step)


@dataclass(frozen=True)
class DiffusionTerm:
    """F(-(-Delta_alpha,h)^(sigma/2) u); ``axes=None`` means all axes.

    sigma = 2 and sigma = 0 select the limiting stencils (discrete Laplacian
    and minus the identity).
    """

    sigma: float
    F: Nonlinearity
    axes: tuple[int, ...] | None = None


@dataclass(frozen=True)
class Problem:
    """A parabolic problem on a truncated box with zero exterior data.

    ``initial(*x)`` and ``source(t, *x)`` receive meshgrid coordinate arrays.
    For the Isaacs scheme ``controls`` replaces ``diffusion``.
    """

    bounds: tuple[tuple[float, float], ...]
    h: float
    initial: Callable = field(repr=False)
    diffusion: tuple[DiffusionTerm, ...] = ()
    source: Callable | None = field(default=None, repr=False)
    hamiltonian: Hamiltonian | None = None
    controls: ControlledCoefficients | None = None
    tail: str = "zeta"
    method: str = "auto"

    def __post_init__(self):
        object.__setattr__(self, "bounds", tuple((float(a), float(b)) for a, b in self.bounds))
        object.__setattr__(self, "diffusion", tuple(self.diffusion))

    @property
    def dim(self) -> int:
        return len(self.bounds)


class Discretization:
    """Weight tables, operators and grid data of a Problem (built once)."""

    def __init__(self, problem: Problem):
        self.problem = problem
        self.h = problem.h
        self.shape = tuple(grid_points(a, b, problem.h) for a, b in problem.bounds)
        axes = [a + problem.h * np.arange(n) for (a, _), n in zip(problem.bounds, self.shape)]
        self.coords = np.meshgrid(*axes, indexing="ij")
        self.terms = []
        for term in problem.diffusion:
            sel = tuple(range(problem.dim)) if term.axes is None else tuple(term.axes)
            self.terms.append((term, *self._operator(term.sigma, sel)))
        self.isaacs_op = None
        if problem.controls is not None:
            self.isaacs_op = self._operator(problem.controls.sigma, tuple(range(problem.dim)))

    def _operator(self, sigma: float, sel: tuple[int, ...]):
        if not sel or len(set(sel)) != len(sel) or not all(0 <= k < len(self.shape) for k in sel):
            raise ValueError(f"invalid axis selection {sel}")
        sub = tuple(self.shape[k] for k in sel)
        R = max(sub) - 1
        if sigma in (0.0, 2.0):
            table = limit_table(sigma, self.h, len(sel))
        elif len(sel) == 1:
            table = weights_1d(sigma, self.h, max(R, 1), tail=self.problem.tail)
        else:
            table = weights_nd(sigma, self.h, len(sel), max(R, 1))
        op = FractionalLaplacian(table, sub, method=self.problem.method)
        rest = tuple(k for k in range(len(self.shape)) if k not in sel)
        order = rest + sel
        return op, order

    @staticmethod
    def apply(op: FractionalLaplacian, order, values: np.ndarray) -> np.ndarray:
        if order == tuple(range(values.ndim)):
            return op(values)
        moved = np.transpose(values, order)
        return np.transpose(op(moved), np.argsort(order))

    def diffusion(self, values: np.ndarray) -> list[np.ndarray]:
        return [self.apply(op, order, values) for _, op, order in self.terms]

    def source(self, t: float) -> np.ndarray:
        f = self.problem.source
        if f is None:
            return np.zeros(self.shape)
        return np.broadcast_to(np.asarray(f(t, *self.coords), dtype=np.float64), self.shape)

    def initial(self) -> GridFunction:
        vals = np.broadcast_to(np.asarray(self.problem.initial(*self.coords), dtype=np.float64), self.shape)
        return GridFunction(self.problem.bounds, self.h, np.array(vals))

    def mass_constants(self) -> list[float]:
        """h^sigma times the diagonal actually used by each diffusion operator."""
        return [op.table.mass_constant for _, op, _ in self.terms]


@lru_cache(maxsize=16)
def discretize(problem: Problem) -> Discretization:
    return Discretization(problem)


def _disc(problem) -> Discretization:
    return problem if isinstance(problem, Discretization) else discretize(problem)


def _values(U) -> np.ndarray:
    return U.values if isinstance(U, GridFunction) else np.asarray(U, dtype=np.float64)


def _wrap(disc: Discretization, values: np.ndarray, step: int | None = None) -> GridFunction:
    if not np.all(np.isfinite(values)):
        raise NumericalError("non-finite values in update", step)
    return GridFunction(disc.problem.bounds, disc.h, values)


# -- CFL -----------------------------------------------------------------------

def max_time_step(problem, scheme: str = "explicit", theta: float = 0.0,
                  printed_theta_exponent: bool = False) -> float:
    """Largest monotone time step of ``scheme`` for ``problem``.

    Mass constants are those of the truncated weight tables in use, so the
    bound guarantees nonnegative update coefficients for the scheme actually run.
    """
    disc = _disc(problem)
    h = disc.h
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    if scheme == "isaacs":
        ctl = disc.problem.controls
        if ctl is None:
            raise ValueError("the isaacs scheme needs controlled coefficients")
        C = disc.isaacs_op[0].table.mass_constant
        Ka = max(ctl.K, ctl.K**ctl.sigma)
        if Ka == ctl.K:
            return cfl_isaacs(CflInputs(h=h, sigma=ctl.sigma, C_sigma=C, K=ctl.K, N=len(disc.shape)))
        # the bound on a^(1/sigma) allows a up to K^sigma, which exceeds K here
        den = ctl.K * len(disc.shape) / h + Ka * C * h ** (-ctl.sigma) + ctl.K
        return 1.0 / den
    terms = [(t.sigma, t.F.L_F, C) for (t, _, _), C in zip(disc.terms, disc.mass_constants())]
    if len(terms) <= 1 and scheme == "theta":
        return min(
            (cfl_theta(CflInputs(h=h, sigma=s, C_sigma=C, L_F=LF), theta, printed_theta_exponent)
             for s, LF, C in terms),
            default=math.inf,
        )
    if len(terms) <= 1 and scheme != "convection":
        return cfl_multidiffusion(h, terms)
    # Several terms share one diagonal coefficient, 1 - tau * sum_k L_F C h^-sigma_k,
    # so the per-term minimum is not enough; the summed rate is used instead.
    if scheme == "theta":
        power = 2.0 if printed_theta_exponent else 1.0
        den = (1.0 - theta) * sum(LF * C * h ** (-power * s) for s, LF, C in terms)
    else:
        den = sum(LF * C * h ** (-s) for s, LF, C in terms)
    if scheme == "convection":
        H = disc.problem.hamiltonian
        den += 2.0 * (0.5 * sum(H.lipschitz) if H is not None else 0.0) / h
    return math.inf if den == 0 else 1.0 / den


# -- single steps --------------------------------------------------------------

def step_explicit(U, problem, tau: float, t: float = 0.0) -> GridFunction:
    """U + tau [sum_k F_k(L_k U) + f(t)]."""
    disc = _disc(problem)
    u = _values(U)
    rhs = disc.source(t).copy()
    for (term, _, _), Lu in zip(disc.terms, disc.diffusion(u)):
        rhs += term.F(Lu)
    return _wrap(disc, u + tau * rhs)


@dataclass(frozen=True)
class FixedPointInfo:
    iterations: int
    residual: float
    tolerance: float
    damping: float


def step_theta(U, problem, tau: float, theta: float, t: float = 0.0,
               tolerance: float | None = None, max_iters: int = 200,
               return_info: bool = False):
    """One step of the theta scheme.

    The implicit relation V = Phi(V) is solved by Picard iteration
    V <- (1 - w) V + w Phi(V).  With q = theta tau sum_k L_F,k D_k (D_k the
    diagonal mass) plain iteration (w = 1) is used when 2q < 1; otherwise
    w = 1/(1 + q), for which the iteration is a sup-norm contraction with
    factor q/(1 + q) for every tau.

    ``theta == 0`` is exactly ``step_explicit``.
    """
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    if theta == 0.0:
        out = step_explicit(U, problem, tau, t)
        return (out, FixedPointInfo(0, 0.0, 0.0, 1.0)) if return_info else out
    disc = _disc(problem)
    u = _values(U)
    f = disc.source(t)
    explicit_part = [(1.0 - theta) * Lu for Lu in disc.diffusion(u)]
    q = theta * tau * sum(term.F.L_F * op.diagonal for term, op, _ in disc.terms)
    w = 1.0 if 2.0 * q < 1.0 else 1.0 / (1.0 + q)
    if tolerance is None:
        tolerance = 1e-12 * (1.0 + float(np.max(np.abs(u))))

    def phi(v):
        rhs = f.copy()
        for (term, _, _), ex, Lv in zip(disc.terms, explicit_part, disc.diffusion(v)):
            rhs += term.F(ex + theta * Lv)
        return u + tau * rhs

    v = u.copy()
    residual = math.inf
    for it in range(1, max_iters + 1):
        pv = phi(v)
        residual = float(np.max(np.abs(pv - v))) if v.size else 0.0
        if not math.isfinite(residual):
            raise NumericalError("non-finite fixed-point iterate")
        if residual <= tolerance:
            break
        v = pv if w == 1.0 else (1.0 - w) * v + w * pv
    else:
        raise FixedPointError(
            f"theta-scheme fixed point not reached in {max_iters} iterations "
            f"(residual {residual:.3e} > {tolerance:.3e})", residual)
    out = _wrap(disc, v)
    if return_info:
        return out, FixedPointInfo(it, residual, tolerance, w)
    return out


def step_convection(U, problem, tau: float, t: float = 0.0) -> GridFunction:
    """Explicit Lax-Friedrichs step
    U + tau [sum_k F_k(L_k U) - H(grad_c U) + h Delta^H U + f]."""
    disc = _disc(problem)
    u = _values(U)
    rhs = disc.source(t).copy()
    for (term, _, _), Lu in zip(disc.terms, disc.diffusion(u)):
        rhs += term.F(Lu)
    H = disc.problem.hamiltonian
    if H is not None:
        grad = central_gradient_field(u, disc.h)
        rhs -= np.asarray(H(grad), dtype=np.float64)
        rhs += disc.h * lf_viscosity_field(u, disc.h, H.viscosity)
    return _wrap(disc, u + tau * rhs)


def _drift(u: np.ndarray, h: float, b: Sequence) -> np.ndarray:
    """sum_k b+_k D+_k u + b-_k D-_k u with b+ = max(b, 0), b- = max(-b, 0);
    every neighbour coefficient is nonnegative."""
    plus, minus = upwind_fields(u, h)
    out = np.zeros_like(u)
    for k, bk in enumerate(b):
        bk = np.asarray(bk, dtype=np.float64)
        out += np.maximum(bk, 0.0) * plus[k] + np.maximum(-bk, 0.0) * minus[k]
    return out


def step_linear(U, problem, tau: float, a, b, c, f) -> GridFunction:
    """U + tau [f - c U + a L U + sum_k (b+_k D+_k U + b-_k D-_k U)] with
    coefficient arrays (or scalars) a, b (one entry per axis), c, f, using the
    fractional operator of ``problem.controls``."""
    disc = _disc(problem)
    u = _values(U)
    op, order = disc.isaacs_op
    Lu = disc.apply(op, order, u)
    val = np.asarray(f, dtype=np.float64) - np.asarray(c) * u + np.asarray(a) * Lu + _drift(u, disc.h, b)
    return _wrap(disc, u + tau * val)


def _isaacs_coefficients(ctl: ControlledCoefficients, alpha, beta, t, coords, shape):
    a = np.broadcast_to(np.asarray(ctl.a(alpha, beta, t, *coords), dtype=np.float64), shape)
    b = [np.broadcast_to(np.asarray(bk, dtype=np.float64), shape) for bk in ctl.b(alpha, beta, t, *coords)]
    c = np.broadcast_to(np.asarray(ctl.c(alpha, beta, t, *coords), dtype=np.float64), shape)
    f = np.broadcast_to(np.asarray(ctl.f(alpha, beta, t, *coords), dtype=np.float64), shape)
    if len(b) != len(shape):
        raise ValueError(f"drift has {len(b)} components, grid has {len(shape)} axes")
    if np.any(a < 0) or np.any(c < 0):
        raise ValueError(f"controls ({alpha!r}, {beta!r}): a and c must be nonnegative")
    return a, b, c, f


def step_isaacs(U, problem, tau: float, t: float = 0.0, controls: ControlledCoefficients | None = None) -> GridFunction:
    """U + tau inf_beta sup_alpha {f - c U + a L U + upwind drift}, by
    enumerating the finite control sets pointwise."""
    disc = _disc(problem)
    ctl = controls if controls is not None else disc.problem.controls
    if ctl is None:
        raise ValueError("the isaacs scheme needs controlled coefficients")
    if disc.isaacs_op is None or disc.isaacs_op[0].table.sigma != ctl.sigma:
        raise ValueError("controls do not match the discretised operator")
    u = _values(U)
    op, order = disc.isaacs_op
    Lu = disc.apply(op, order, u)
    plus, minus = upwind_fields(u, disc.h)
    sigma = ctl.sigma
    inf_beta = None
    exceeded = False
    for beta in ctl.betas:
        sup_alpha = None
        for alpha in ctl.alphas:
            a, b, c, f = _isaacs_coefficients(ctl, alpha, beta, t, disc.coords, disc.shape)
            val = f - c * u + a * Lu
            for k, bk in enumerate(b):
                val = val + np.maximum(bk, 0.0) * plus[k] + np.maximum(-bk, 0.0) * minus[k]
            sup_alpha = val if sup_alpha is None else np.maximum(sup_alpha, val)
            bound = max(float(np.max(a)) ** (1.0 / sigma) if a.size else 0.0,
                        max((float(np.max(np.abs(bk))) for bk in b), default=0.0),
                        float(np.max(c)), float(np.max(np.abs(f))))
            exceeded |= bound > ctl.K * (1 + 1e-12)
        inf_beta = sup_alpha if inf_beta is None else np.minimum(inf_beta, sup_alpha)
    if exceeded:
        warnings.warn(f"coefficients exceed the declared bound K={ctl.K}; the CFL bound may not hold",
                      RuntimeWarning, stacklevel=2)
    return _wrap(disc, u + tau * inf_beta)


# -- time loop -----------------------------------------------------------------

@dataclass(frozen=True)
class SchemeConfig:
    """Time discretisation settings.

    Exactly one of ``tau`` (explicit step) or ``safety`` (fraction of the
    CFL bound) drives the step; the step is then shrunk so that T/tau is an
    integer.
    """

    t_final: float
    scheme: str = "explicit"
    theta: float = 0.0
    tau: float | None = None
    safety: float = 0.9
    fp_tolerance: float | None = None
    fp_max_iters: int = 200
    cfl_override: bool = False
    printed_theta_exponent: bool = False
    snapshot_times: tuple[float, ...] = ()

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if not self.t_final >= 0:
            raise ValueError("t_final must be nonnegative")
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")
        if self.tau is not None and not self.tau > 0:
            raise ValueError("tau must be positive")
        if not 0.0 < self.safety <= 1.0:
            raise ValueError("safety factor must lie in (0, 1]")
        if self.fp_tolerance is not None and not self.fp_tolerance > 0:
            raise ValueError("fp_tolerance must be positive")
        object.__setattr__(self, "snapshot_times", tuple(float(s) for s in self.snapshot_times))


@dataclass
class Trajectory:
    times: list[float]
    snapshots: list[GridFunction]
    tau: float
    steps: int
    sup_norms: np.ndarray
    stability_bounds: np.ndarray
    cfl_bound: float
    fixed_point: list[FixedPointInfo] = field(default_factory=list)

    @property
    def final(self) -> GridFunction:
        return self.snapshots[-1]

    def at(self, t: float) -> GridFunction:
        k = int(np.argmin(np.abs(np.asarray(self.times) - t)))
        return self.snapshots[k]


def choose_step(problem, config: SchemeConfig) -> tuple[float, int, float]:
    """(tau, M, cfl_bound) with M tau = T exactly."""
    bound = max_time_step(problem, config.scheme, config.theta, config.printed_theta_exponent)
    T = config.t_final
    if config.tau is not None:
        tau = config.tau
        if tau > bound * (1 + 1e-12) and not config.cfl_override:
            raise CflViolation(f"tau={tau:.6g} exceeds the monotonicity bound {bound:.6g}")
    else:
        if not math.isfinite(bound):
            raise ValueError("scheme has no step restriction; give tau explicitly")
        tau = config.safety * bound
    if T == 0:
        return tau, 0, bound
    M = max(1, math.ceil(T / tau - 1e-9))
    return T / M, M, bound


def _stability_rate(disc: Discretization, scheme: str, t: float) -> float:
    """Growth rate of the sup-norm bound over one step."""
    if scheme == "isaacs":
        ctl = disc.problem.controls
        return max(
            float(np.max(np.abs(_isaacs_coefficients(ctl, al, be, t, disc.coords, disc.shape)[3])))
            for al in ctl.alphas for be in ctl.betas
        )
    rate = sum(abs(term.F.F0) for term, _, _ in disc.terms)
    if scheme == "convection" and disc.problem.hamiltonian is not None:
        zero = np.zeros((len(disc.shape),) + (1,) * len(disc.shape))
        rate += float(np.max(np.abs(disc.problem.hamiltonian(zero))))
    f = disc.source(t)
    return rate + (float(np.max(np.abs(f))) if f.size else 0.0)


def solve(problem: Problem, config: SchemeConfig, callback: Callable | None = None) -> Trajectory:
    """Run the selected scheme from the sampled initial datum to t_final.

    The sup norm is checked after every step against
    ||u0|| + sum_n tau (|F(0)| + ||f(t_n)||); a violation raises
    ``NumericalError`` unless ``cfl_override`` is set.
    """
    disc = discretize(problem)
    scheme = config.scheme
    if scheme == "isaacs" and problem.controls is None:
        raise ValueError("the isaacs scheme needs controlled coefficients")
    if scheme == "convection" and problem.hamiltonian is None:
        logger.info("convection scheme without Hamiltonian reduces to the explicit scheme")
    tau, M, bound = choose_step(disc, config)
    U = disc.initial()
    wanted = sorted(set(config.snapshot_times) | {config.t_final})
    wanted_steps = {}
    for s in wanted:
        if not 0 <= s <= config.t_final + 1e-12:
            raise ValueError(f"snapshot time {s} outside [0, {config.t_final}]")
        wanted_steps.setdefault(int(round(s / tau)) if M else 0, s)
    times, snaps = [], []
    if 0 in wanted_steps:
        times.append(0.0)
        snaps.append(U)
    norms = np.empty(M + 1)
    bounds = np.empty(M + 1)
    norms[0] = bounds[0] = U.sup_norm()
    fp_info = []
    for n in range(M):
        t = n * tau
        try:
            if scheme in ("explicit", "multidiffusion"):
                U = step_explicit(U, disc, tau, t)
            elif scheme == "theta":
                U, info = step_theta(U, disc, tau, config.theta, t, config.fp_tolerance,
                                     config.fp_max_iters, return_info=True)
                fp_info.append(info)
            elif scheme == "convection":
                U = step_convection(U, disc, tau, t)
            else:
                U = step_isaacs(U, disc, tau, t)
        except NumericalError as exc:
            if exc.step is None:
                exc.step = n + 1
                exc.args = (f"step {n + 1}: {exc.args[0]}",)
            raise
        norms[n + 1] = U.sup_norm()
        bounds[n + 1] = bounds[n] + tau * _stability_rate(disc, scheme, t)
        if norms[n + 1] > bounds[n + 1] * (1 + 1e-12) + 1e-12 and not config.cfl_override:
            raise NumericalError(
                f"sup norm {norms[n + 1]:.6g} exceeds the stability bound {bounds[n + 1]:.6g}", n + 1)
        if n + 1 in wanted_steps:
            times.append((n + 1) * tau)
            snaps.append(U)
        if callback is not None:
            callback(n + 1, (n + 1) * tau, U)
    return Trajectory(times, snaps, tau, M, norms, bounds, bound, fp_info)
