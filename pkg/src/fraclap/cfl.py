"""Largest admissible time steps for the monotone schemes.

Each function returns ``math.inf`` when the scheme has no restriction
(e.g. no diffusion and no drift).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

__all__ = [
    "CflInputs",
    "cfl_explicit",
    "cfl_theta",
    "cfl_convection",
    "cfl_multidiffusion",
    "cfl_isaacs",
]


@dataclass(frozen=True)
class CflInputs:
    """Constants entering the step restrictions.

    ``L_H`` holds the per-axis bounds ||d_k H||_inf; the Lax-Friedrichs
    constant is half their sum.
    """

    h: float
    sigma: float
    C_sigma: float
    L_F: float = 1.0
    L_H: Sequence[float] = field(default_factory=tuple)
    K: float = 0.0
    N: int = 1

    def __post_init__(self):
        for name in ("h", "C_sigma", "L_F", "K"):
            v = getattr(self, name)
            if v < 0 or math.isnan(v):
                raise ValueError(f"{name} must be nonnegative, got {v}")
        if self.h <= 0:
            raise ValueError("h must be positive")
        if any(v < 0 for v in self.L_H):
            raise ValueError("Hamiltonian Lipschitz bounds must be nonnegative")


def _ratio(num: float, den: float) -> float:
    return math.inf if den == 0 else num / den


def cfl_explicit(inp: CflInputs) -> float:
    """tau <= h^sigma / (L_F C_sigma)."""
    return _ratio(inp.h**inp.sigma, inp.L_F * inp.C_sigma)


def cfl_theta(inp: CflInputs, theta: float, printed_exponent: bool = False) -> float:
    """Bound on tau from (1 - theta) tau <= h^p / (L_F C_sigma).

    p = sigma by default; ``printed_exponent=True`` uses p = 2 sigma instead.
    theta = 1 is unrestricted.
    """
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    p = 2 * inp.sigma if printed_exponent else inp.sigma
    return _ratio(inp.h**p, (1.0 - theta) * inp.L_F * inp.C_sigma)


def cfl_convection(inp: CflInputs) -> float:
    """tau <= 1 / (2 L_H / h + L_F C_sigma h^-sigma), L_H = sum_k ||d_k H|| / 2."""
    L_H = 0.5 * sum(inp.L_H)
    return _ratio(1.0, 2.0 * L_H / inp.h + inp.L_F * inp.C_sigma * inp.h ** (-inp.sigma))


def cfl_multidiffusion(h: float, terms: Sequence[tuple[float, float, float]]) -> float:
    """min_k h^sigma_k / (L_F_k C_sigma_k) over terms (sigma_k, L_F_k, C_sigma_k)."""
    if not terms:
        return math.inf
    return min(_ratio(h**s, LF * C) for s, LF, C in terms)


def cfl_isaacs(inp: CflInputs) -> float:
    """tau <= 1 / (K (N/h + C_sigma h^-sigma + 1))."""
    return _ratio(1.0, inp.K * (inp.N / inp.h + inp.C_sigma * inp.h ** (-inp.sigma) + 1.0))
