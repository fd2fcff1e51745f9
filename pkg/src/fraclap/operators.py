"""Discrete fractional Laplacian and first-order difference operators.

All operators read the grid function as extended by zero outside its box.
For the fractional operator that means neighbour terms outside the box drop
out while the diagonal keeps the full mass of the weight table.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy import fft as sfft

from .grid import AxisMask, GridFunction
from .weights import WeightTable

__all__ = [
    "FractionalLaplacian",
    "apply_fractional",
    "apply_fractional_field",
    "apply_directional",
    "central_gradient",
    "upwind_diff_plus",
    "upwind_diff_minus",
    "lf_viscosity",
    "central_gradient_field",
    "upwind_fields",
    "lf_viscosity_field",
]

# direct summation below this many multiply-adds per application
_DIRECT_LIMIT = 2_000_000


def _check_compatible(table: WeightTable, dim: int, h: float):
    if table.dim != dim:
        raise ValueError(f"weight table is {table.dim}-dimensional, grid needs {dim}")
    if not np.isclose(table.h, h, rtol=1e-12, atol=0.0):
        raise ValueError(f"weight table spacing {table.h} differs from grid spacing {h}")


class FractionalLaplacian:
    """-(-Delta_h)^(sigma/2) acting on the last ``table.dim`` axes of arrays
    of shape (..., *shape), with zero exterior values.

    Offsets beyond the grid width never meet an interior neighbour, so the
    kernel is cropped to at most (n_k - 1) per axis.

    ``method`` is ``"direct"`` (shift-and-add over offsets, monotone in
    floating point), ``"fft"`` (zero-padded FFT convolution) or ``"auto"``.
    """

    def __init__(self, table: WeightTable, shape: Sequence[int], method: str = "auto"):
        shape = tuple(int(n) for n in shape)
        if len(shape) != table.dim:
            raise ValueError(f"weight table is {table.dim}-dimensional, shape is {shape}")
        R = table.radius
        crop = tuple(min(R, n - 1) for n in shape)
        sl = tuple(slice(R - c, R + c + 1) for c in crop)
        self.table = table
        self.shape = shape
        self.kernel = np.ascontiguousarray(table.kernel[sl])
        self.crop = crop
        self.diagonal = table.diagonal_mass
        work = int(np.prod(shape)) * int(np.count_nonzero(self.kernel))
        if method == "auto":
            method = "direct" if work <= _DIRECT_LIMIT else "fft"
        if method not in ("direct", "fft"):
            raise ValueError(f"unknown method {method!r}")
        self.method = method
        if method == "direct":
            self._offsets = [
                (tuple(int(o) for o in off), float(self.kernel[tuple(off + np.array(crop))]))
                for off in np.argwhere(self.kernel > 0) - np.array(crop)
            ]
        else:
            # circular length n + c already keeps wrap-around out of the cropped window
            self._fshape = tuple(sfft.next_fast_len(n + c, real=True) for n, c in zip(shape, crop))
            self._kf = sfft.rfftn(self.kernel, self._fshape)

    def offdiagonal(self, values: np.ndarray) -> np.ndarray:
        """sum_{j != 0} kappa_j U_{i+j} with exterior values zero."""
        values = np.asarray(values, dtype=np.float64)
        k = len(self.shape)
        if values.shape[-k:] != self.shape:
            raise ValueError(f"array shape {values.shape} does not end with {self.shape}")
        if self.method == "direct":
            return self._direct(values)
        return self._fft(values)

    def __call__(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        return self.offdiagonal(values) - self.diagonal * values

    def _direct(self, values: np.ndarray) -> np.ndarray:
        k = len(self.shape)
        lead = values.ndim - k
        pad = [(0, 0)] * lead + [(c, c) for c in self.crop]
        padded = np.pad(values, pad)
        out = np.zeros_like(values)
        for off, w in self._offsets:
            sl = (Ellipsis,) + tuple(slice(c + o, c + o + n) for o, c, n in zip(off, self.crop, self.shape))
            out += w * padded[sl]
        return out

    def _fft(self, values: np.ndarray) -> np.ndarray:
        k = len(self.shape)
        axes = tuple(range(values.ndim - k, values.ndim))
        vf = sfft.rfftn(values, self._fshape, axes=axes)
        full = sfft.irfftn(vf * self._kf, self._fshape, axes=axes)
        sl = (Ellipsis,) + tuple(slice(c, c + n) for c, n in zip(self.crop, self.shape))
        return full[sl]


def apply_fractional(table: WeightTable, U: GridFunction, i: Sequence[int]) -> float:
    """-(-Delta_h)^(sigma/2) U at the single node ``i``.

    Neighbours are visited in the same order as the direct field
    application, so the two agree bit for bit.
    """
    _check_compatible(table, U.dim, U.h)
    i = tuple(int(v) for v in np.atleast_1d(i))
    if len(i) != U.dim or any(not 0 <= v < n for v, n in zip(i, U.shape)):
        raise IndexError(f"index {i} outside grid of shape {U.shape}")
    op = FractionalLaplacian(table, U.shape, method="direct")
    acc = np.float64(0.0)
    for off, w in op._offsets:
        nb = tuple(a + b for a, b in zip(i, off))
        if all(0 <= v < n for v, n in zip(nb, U.shape)):
            acc += w * U.values[nb]
        else:
            acc += w * 0.0
    return float(acc - op.diagonal * U.values[i])


def apply_fractional_field(table: WeightTable, U: GridFunction, method: str = "auto") -> GridFunction:
    """-(-Delta_h)^(sigma/2) U at every node."""
    _check_compatible(table, U.dim, U.h)
    op = FractionalLaplacian(table, U.shape, method=method)
    return U.with_values(op(U.values))


def _directional_op(table: WeightTable, mask: AxisMask, U: GridFunction, method: str):
    if mask.dim != U.dim:
        raise ValueError(f"mask has {mask.dim} flags, grid has {U.dim} axes")
    sel = mask.selected
    _check_compatible(table, len(sel), U.h)
    rest = tuple(k for k in range(U.dim) if k not in sel)
    order = rest + sel
    sub = tuple(U.shape[k] for k in sel)
    return FractionalLaplacian(table, sub, method=method), order


def apply_directional(table: WeightTable, mask: AxisMask, U: GridFunction, method: str = "auto") -> GridFunction:
    """Fractional operator along the axes selected by ``mask``, independently
    on every slice of the remaining axes."""
    op, order = _directional_op(table, mask, U, method)
    moved = np.transpose(U.values, order)
    out = np.transpose(op(moved), np.argsort(order))
    return U.with_values(out)


# -- first-order differences ------------------------------------------------

def _at(U: GridFunction, idx) -> float:
    if all(0 <= v < n for v, n in zip(idx, U.shape)):
        return float(U.values[tuple(idx)])
    return 0.0


def _check_index(U: GridFunction, i) -> tuple[int, ...]:
    i = tuple(int(v) for v in np.atleast_1d(i))
    if len(i) != U.dim or any(not 0 <= v < n for v, n in zip(i, U.shape)):
        raise IndexError(f"index {i} outside grid of shape {U.shape}")
    return i


def _neighbour(i, k, step):
    j = list(i)
    j[k] += step
    return j


def central_gradient(U: GridFunction, i) -> np.ndarray:
    """(U(x + h e_k) - U(x - h e_k)) / 2h for each axis k."""
    i = _check_index(U, i)
    return np.array([
        (_at(U, _neighbour(i, k, 1)) - _at(U, _neighbour(i, k, -1))) / (2 * U.h)
        for k in range(U.dim)
    ])


def upwind_diff_plus(U: GridFunction, i, axis: int) -> float:
    """(U(x + h e_k) - U(x)) / h."""
    i = _check_index(U, i)
    return (_at(U, _neighbour(i, axis, 1)) - U.values[i]) / U.h


def upwind_diff_minus(U: GridFunction, i, axis: int) -> float:
    """(U(x - h e_k) - U(x)) / h, the backward one-sided difference."""
    i = _check_index(U, i)
    return (_at(U, _neighbour(i, axis, -1)) - U.values[i]) / U.h


def lf_viscosity(U: GridFunction, i, L_H: Sequence[float]) -> float:
    """sum_k L_H[k] (U(x + h e_k) - 2U(x) + U(x - h e_k)) / h^2."""
    i = _check_index(U, i)
    L_H = np.broadcast_to(np.asarray(L_H, dtype=np.float64), (U.dim,))
    u0 = U.values[i]
    return float(sum(
        L_H[k] * (_at(U, _neighbour(i, k, 1)) - 2 * u0 + _at(U, _neighbour(i, k, -1))) / U.h**2
        for k in range(U.dim)
    ))


def _shifted(values: np.ndarray, axis: int, step: int) -> np.ndarray:
    """values[i + step e_axis] with zero outside."""
    out = np.zeros_like(values)
    n = values.shape[axis]
    src = [slice(None)] * values.ndim
    dst = [slice(None)] * values.ndim
    if step > 0:
        src[axis] = slice(step, n)
        dst[axis] = slice(0, n - step)
    else:
        src[axis] = slice(0, n + step)
        dst[axis] = slice(-step, n)
    out[tuple(dst)] = values[tuple(src)]
    return out


def central_gradient_field(values: np.ndarray, h: float) -> np.ndarray:
    """Array of shape (N, *values.shape) of central differences."""
    return np.stack([
        (_shifted(values, k, 1) - _shifted(values, k, -1)) / (2 * h)
        for k in range(values.ndim)
    ])


def upwind_fields(values: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """(D+, D-) per axis, each of shape (N, *values.shape)."""
    plus = np.stack([(_shifted(values, k, 1) - values) / h for k in range(values.ndim)])
    minus = np.stack([(_shifted(values, k, -1) - values) / h for k in range(values.ndim)])
    return plus, minus


def lf_viscosity_field(values: np.ndarray, h: float, L_H: Sequence[float]) -> np.ndarray:
    L_H = np.broadcast_to(np.asarray(L_H, dtype=np.float64), (values.ndim,))
    out = np.zeros_like(values)
    for k in range(values.ndim):
        out += L_H[k] * (_shifted(values, k, 1) - 2 * values + _shifted(values, k, -1)) / h**2
    return out
