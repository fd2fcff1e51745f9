"""Uniform grids on a truncated box with zero exterior extension."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = ["GridFunction", "AxisMask", "grid_points"]


def grid_points(a: float, b: float, h: float) -> int:
    """Number of nodes a, a+h, ..., b; raises if (b - a)/h is not an integer."""
    if not b > a:
        raise ValueError(f"empty interval [{a}, {b}]")
    n = (b - a) / h
    k = round(n)
    if abs(n - k) > 1e-9 * max(1.0, abs(n)):
        raise ValueError(f"interval [{a}, {b}] is not a whole number of steps h={h}")
    return int(k) + 1


@dataclass(frozen=True)
class GridFunction:
    """Values on the nodes of ``bounds`` with spacing ``h``; zero outside the box.

    ``values`` has one array axis per spatial axis, so a 2d function on
    [a0, b0] x [a1, b1] has shape (n0, n1) with ``values[i, j]`` at
    (a0 + i h, a1 + j h).
    """

    bounds: tuple[tuple[float, float], ...]
    h: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        bounds = tuple((float(a), float(b)) for a, b in self.bounds)
        object.__setattr__(self, "bounds", bounds)
        h = float(self.h)
        if not (h > 0 and math.isfinite(h)):
            raise ValueError(f"spacing must be positive, got {self.h!r}")
        object.__setattr__(self, "h", h)
        shape = tuple(grid_points(a, b, h) for a, b in bounds)
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != shape:
            raise ValueError(f"values have shape {values.shape}, grid needs {shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("grid values must be finite")
        values = values.copy() if values.flags.writeable else values
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def sample(cls, func: Callable, bounds: Sequence[Sequence[float]], h: float) -> "GridFunction":
        """Evaluate ``func(x0, x1, ...)`` on the grid (func receives meshgrid arrays)."""
        bounds = tuple(tuple(b) for b in bounds)
        axes = [a + h * np.arange(grid_points(a, b, h)) for a, b in bounds]
        mesh = np.meshgrid(*axes, indexing="ij")
        vals = np.broadcast_to(np.asarray(func(*mesh), dtype=np.float64), mesh[0].shape)
        return cls(bounds, h, np.array(vals))

    @property
    def dim(self) -> int:
        return len(self.bounds)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    def axis(self, k: int) -> np.ndarray:
        a, _ = self.bounds[k]
        return a + self.h * np.arange(self.shape[k])

    def coords(self) -> list[np.ndarray]:
        return np.meshgrid(*[self.axis(k) for k in range(self.dim)], indexing="ij")

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.bounds, self.h, values)

    def index_of(self, *x: float) -> tuple[int, ...]:
        """Grid index of the node at coordinates ``x`` (must be a node)."""
        idx = []
        for k, xk in enumerate(x):
            a, _ = self.bounds[k]
            r = (xk - a) / self.h
            i = round(r)
            if abs(r - i) > 1e-9 or not 0 <= i < self.shape[k]:
                raise ValueError(f"coordinate {xk} is not a grid node on axis {k}")
            idx.append(int(i))
        return tuple(idx)

    def window_mask(self, window: Sequence[Sequence[float]]) -> np.ndarray:
        """Boolean mask of nodes inside the closed box ``window``."""
        masks = []
        for k, (lo, hi) in enumerate(window):
            x = self.axis(k)
            tol = 1e-9 * self.h
            masks.append((x >= lo - tol) & (x <= hi + tol))
        shaped = [m.reshape([-1 if j == k else 1 for j in range(self.dim)]) for k, m in enumerate(masks)]
        return np.broadcast_to(functools.reduce(np.logical_and, shaped), self.shape)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0


@dataclass(frozen=True)
class AxisMask:
    """0/1 flags choosing the axes a directional operator acts on."""

    flags: tuple[int, ...]

    def __post_init__(self):
        flags = tuple(int(f) for f in self.flags)
        if any(f not in (0, 1) for f in flags):
            raise ValueError(f"axis flags must be 0 or 1, got {self.flags}")
        if not any(flags):
            raise ValueError("at least one axis must be selected")
        object.__setattr__(self, "flags", flags)

    @property
    def dim(self) -> int:
        return len(self.flags)

    @property
    def selected(self) -> tuple[int, ...]:
        return tuple(k for k, f in enumerate(self.flags) if f)
