"""Quadrature weights of the power of the discrete Laplacian.

For sigma in (0, 2) the operator -(-Delta_h)^(sigma/2) acts as

    sum_{j != 0} (phi(x + h j) - phi(x)) kappa_j,

with nonnegative weights kappa_j = h^-sigma K_j.  In one dimension K_j has a
closed form in Gamma functions; in N dimensions it is an integral of products
of exponentially scaled modified Bessel functions against t^(-1 - sigma/2).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gamma, gammaln, roots_legendre

from .special import check_sigma, gamma_ratio, gamma_ratio_tail, scaled_bessel_i, zeta_value

__all__ = [
    "QuadratureError",
    "WeightTable",
    "prefactor_1d",
    "heat_kernel",
    "weights_1d",
    "weights_nd",
    "mass_constant",
    "limit_table",
]


class QuadratureError(ArithmeticError):
    """Estimated quadrature error exceeded the requested tolerance."""


@dataclass(frozen=True)
class WeightTable:
    """Truncated weights kappa_j for |j|_inf <= radius.

    ``kernel`` is a dense array of shape (2R+1,)*dim indexed by j + R with a
    zero at the centre.  ``diagonal_mass`` is the full sum of all weights,
    including the ``tail_mass`` of the indices beyond the radius.
    """

    sigma: float
    h: float
    dim: int
    radius: int
    kernel: np.ndarray = field(repr=False)
    tail_mass: float
    diagonal_mass: float

    def __post_init__(self):
        self.kernel.setflags(write=False)

    @property
    def weights(self) -> dict[tuple[int, ...], float]:
        R = self.radius
        out = {}
        for idx in itertools.product(range(2 * R + 1), repeat=self.dim):
            j = tuple(i - R for i in idx)
            if any(j):
                out[j] = float(self.kernel[idx])
        return out

    def kappa(self, *j: int) -> float:
        if len(j) != self.dim:
            raise ValueError(f"expected {self.dim} indices, got {len(j)}")
        if not any(j):
            raise ValueError("kappa is defined for j != 0 only")
        if max(abs(v) for v in j) > self.radius:
            raise IndexError(f"index {j} beyond radius {self.radius}")
        return float(self.kernel[tuple(v + self.radius for v in j)])

    @property
    def mass_constant(self) -> float:
        """h^sigma times the diagonal mass."""
        return self.diagonal_mass * self.h**self.sigma

    def rescaled(self, h: float) -> "WeightTable":
        """Same weights at a different spacing (kappa scales like h^-sigma)."""
        h = _check_h(h)
        f = (self.h / h) ** self.sigma
        return WeightTable(
            self.sigma, h, self.dim, self.radius,
            self.kernel * f, self.tail_mass * f, self.diagonal_mass * f,
        )


def _check_h(h: float) -> float:
    h = float(h)
    if not (h > 0 and math.isfinite(h)):
        raise ValueError(f"grid spacing must be positive, got {h!r}")
    return h


def _check_radius(R) -> int:
    if int(R) != R or R < 1:
        raise ValueError(f"radius must be an integer >= 1, got {R!r}")
    return int(R)


def prefactor_1d(sigma: float) -> float:
    """2^sigma Gamma((1+sigma)/2) / (sqrt(pi) |Gamma(-sigma/2)|)."""
    sigma = check_sigma(sigma)
    return 2.0**sigma * gamma((1 + sigma) / 2) / (math.sqrt(math.pi) * abs(gamma(-sigma / 2)))


def weights_1d(sigma: float, h: float, R: int, tail: str = "zeta") -> WeightTable:
    """Closed-form one-dimensional weights.

    kappa_j = prefactor_1d(sigma) h^-sigma Gamma(|j| - sigma/2) / Gamma(|j| + 1 + sigma/2).

    ``tail`` selects how the weight beyond the radius enters the diagonal:

    ``"zeta"``
        2 * prefactor * (zeta(1+sigma) - sum_{m=1}^{R-1} m^-(1+sigma)), i.e. the
        summand replaced by its power-law asymptote.
    ``"exact"``
        the telescoped closed form of the remaining Gamma-ratio sum.
    ``"none"``
        drop it.
    """
    sigma = check_sigma(sigma)
    h = _check_h(h)
    R = _check_radius(R)
    c = prefactor_1d(sigma)
    m = np.arange(1, R + 1)
    unit = c * gamma_ratio(m, sigma)
    if tail == "zeta":
        partial = math.fsum(np.arange(1, R, dtype=np.float64) ** (-(1 + sigma)))
        tail_unit = 2.0 * c * (zeta_value(sigma) - partial)
    elif tail == "exact":
        tail_unit = 2.0 * c * gamma_ratio_tail(R + 1, sigma)
    elif tail == "none":
        tail_unit = 0.0
    else:
        raise ValueError(f"unknown tail rule {tail!r}")
    scale = h ** (-sigma)
    kernel = np.concatenate([unit[::-1], [0.0], unit]) * scale
    inner = 2.0 * math.fsum(unit)
    return WeightTable(
        sigma, h, 1, R, kernel,
        tail_mass=tail_unit * scale,
        diagonal_mass=(inner + tail_unit) * scale,
    )


def heat_kernel(j, t) -> np.ndarray:
    """G(j, t) = exp(-2Nt) prod_i I_{|j_i|}(2t), the semi-discrete heat kernel.

    ``j`` is a sequence of N integers (or an (K, N) array of them); ``t`` is an
    array of times.  Returns shape (len(t),) or (K, len(t)).
    """
    j = np.abs(np.asarray(j, dtype=np.int64))
    single = j.ndim == 1
    j = np.atleast_2d(j)
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    table = scaled_bessel_i(int(j.max()), 2.0 * t)  # (len(t), mmax+1)
    out = np.ones((j.shape[0], t.size))
    for axis in range(j.shape[1]):
        out *= table[:, j[:, axis]].T
    return out[0] if single else out


# Quadrature rules.  Near t = 0 the integrands are t^(-sigma/2) times an
# entire function (G(j,t)/t for j != 0, (1 - G(0,t))/t for the mass), so a
# Gauss-Jacobi rule with that weight is spectrally accurate on (0, 1).  On
# (1, inf) the substitution t = e^u gives an integrand decaying like
# exp(-(N + sigma) u / 2), integrated by composite Gauss-Legendre on unit panels.
_JACOBI_NODES = 64
_PANEL_NODES = 24
# e^-x I_m(x) < 1e-30 for m > 40 when x <= 2
_MASS_ORDERS = 48


def _gauss_jacobi(n: int, a: float, b: float):
    """Golub-Welsch rule for the weight (1-x)^a (1+x)^b on [-1, 1].

    scipy's roots_jacobi loses several digits when b approaches -1.
    """
    k = np.arange(n, dtype=np.float64)
    ab = a + b
    with np.errstate(divide="ignore", invalid="ignore"):
        diag = (b * b - a * a) / ((2 * k + ab) * (2 * k + ab + 2))
    diag[0] = (b - a) / (ab + 2)
    k = k[1:]
    off = np.sqrt(
        4 * k * (k + a) * (k + b) * (k + ab)
        / ((2 * k + ab) ** 2 * (2 * k + ab + 1) * (2 * k + ab - 1))
    )
    x, vec = eigh_tridiagonal(diag, off)
    mu0 = math.exp((ab + 1) * math.log(2) + gammaln(a + 1) + gammaln(b + 1) - gammaln(ab + 2))
    return x, mu0 * vec[0] ** 2


@lru_cache(maxsize=64)
def _jacobi_rule(sigma: float, n: int):
    # weight t^(-sigma/2) on (0, 1) via t = (1+x)/2
    x, w = _gauss_jacobi(n, 0.0, -sigma / 2)
    t = (1 + x) / 2
    w = w * 2.0 ** (sigma / 2 - 1)
    return t, w


@lru_cache(maxsize=64)
def _log_panel_rule(decay: float, n: int):
    # panels on u in [0, umax] with exp(-decay * umax) below 1e-18
    umax = max(8.0, 42.0 / decay)
    npanel = int(math.ceil(umax))
    x, w = roots_legendre(n)
    u = (np.arange(npanel)[:, None] + (x[None, :] + 1) / 2).ravel()
    wu = np.tile(w / 2, npanel)
    return np.exp(u), wu


def _integrals(sigma: float, dim: int, js: np.ndarray, n_jac: int, n_pan: int):
    """Unit-spacing weights |Gamma(-sigma/2)| K_j for rows of ``js`` and the
    corresponding integral of (1 - G(0, t)) t^(-1 - sigma/2)."""
    tj, wj = _jacobi_rule(sigma, n_jac)
    tl, wl = _log_panel_rule((dim + sigma) / 2.0, n_pan)
    t = np.concatenate([tj, tl])
    mmax = int(js.max()) if js.size else 0
    table = scaled_bessel_i(mmax, 2.0 * t)
    nj = tj.size

    def G(rows):
        g = np.ones((rows.shape[0], t.size))
        for axis in range(dim):
            g *= table[:, rows[:, axis]].T
        return g

    g = G(js) if js.size else np.zeros((0, t.size))
    # (0,1): integrand G / t against weight t^(-sigma/2)
    near = (g[:, :nj] / tj) @ wj
    # (1,inf): dt = t du, integrand G t^(-sigma/2)
    far = g[:, nj:] @ (wl * tl ** (-sigma / 2))
    kappa = near + far

    g0 = G(np.zeros((1, dim), dtype=np.int64))[0]
    # 1 - g^N = (1 - g)(1 + g + ... + g^(N-1)) with 1 - g = 2 sum_{m>=1} e^-x I_m(x),
    # which avoids the cancellation in 1 - G(0, t) for small t
    near_table = scaled_bessel_i(_MASS_ORDERS, 2.0 * tj)
    g1 = near_table[:, 0]
    one_minus = 2.0 * near_table[:, :0:-1].sum(axis=1)
    geometric = sum(g1**k for k in range(dim))
    mass_near = (one_minus * geometric / tj) @ wj
    # int_1^inf (1 - G0) t^(-1-s/2) dt = 2/s - int_1^inf G0 t^(-1-s/2) dt
    mass_far = 2.0 / sigma - g0[nj:] @ (wl * tl ** (-sigma / 2))
    return kappa, mass_near + mass_far


def _canonical_indices(dim: int, R: int) -> np.ndarray:
    """Nonzero index vectors with R >= j_1 >= j_2 >= ... >= j_N >= 0."""
    rows = [c for c in itertools.combinations_with_replacement(range(R, -1, -1), dim) if c[0] > 0]
    return np.array(rows, dtype=np.int64).reshape(-1, dim)


def _nd_unit(sigma: float, dim: int, R: int, rtol: float):
    js = _canonical_indices(dim, R)
    k1, m1 = _integrals(sigma, dim, js, _JACOBI_NODES, _PANEL_NODES)
    k2, m2 = _integrals(sigma, dim, js, _JACOBI_NODES + 32, _PANEL_NODES + 12)
    err = np.max(np.abs(k1 - k2) / np.maximum(np.abs(k2), 1e-300)) if js.size else 0.0
    merr = abs(m1 - m2) / abs(m2)
    if err > rtol or merr > rtol:
        raise QuadratureError(
            f"weight quadrature did not converge (sigma={sigma}, N={dim}, R={R}): "
            f"estimated relative error {max(err, merr):.2e} > {rtol:.1e}"
        )
    g = abs(gamma(-sigma / 2))
    return js, k2 / g, m2 / g


def weights_nd(sigma: float, h: float, dim: int, R: int, rtol: float = 1e-10) -> WeightTable:
    """Weights in ``dim`` dimensions from the Bessel-function integral.

    Each distinct |j| pattern (up to sign flips and permutations) is
    integrated once and copied to its orbit, so the table is exactly
    symmetric.  The mass beyond the radius is set so that the diagonal equals
    ``mass_constant(sigma, dim) / h^sigma``.

    Raises
    ------
    QuadratureError
        If two quadrature resolutions disagree by more than ``rtol``.
    """
    sigma = check_sigma(sigma)
    h = _check_h(h)
    R = _check_radius(R)
    if int(dim) != dim or dim < 1:
        raise ValueError(f"dimension must be a positive integer, got {dim!r}")
    dim = int(dim)
    js, unit, mass = _nd_unit(sigma, dim, R, rtol)
    kernel = np.zeros((2 * R + 1,) * dim)
    for row, val in zip(js, unit):
        for perm in set(itertools.permutations(row)):
            for signs in itertools.product((1, -1), repeat=dim):
                kernel[tuple(R + s * p for s, p in zip(signs, perm))] = val
    inner = math.fsum(kernel.ravel())
    scale = h ** (-sigma)
    return WeightTable(
        sigma, h, dim, R, kernel * scale,
        tail_mass=max(mass - inner, 0.0) * scale,
        diagonal_mass=max(mass, inner) * scale,
    )


@lru_cache(maxsize=128)
def mass_constant(sigma: float, dim: int = 1) -> float:
    """C_sigma: the sum of all weights at unit spacing.

    Computed as (1/|Gamma(-sigma/2)|) int_0^inf (1 - G(0, t)) t^(-1-sigma/2) dt,
    which is the full lattice sum with nothing truncated.  Accuracy is checked
    against a finer quadrature to 1e-10 (relative).
    """
    sigma = check_sigma(sigma)
    if int(dim) != dim or dim < 1:
        raise ValueError(f"dimension must be a positive integer, got {dim!r}")
    _, _, mass = _nd_unit(sigma, int(dim), 1, 1e-10)
    return float(mass)


def limit_table(sigma: float, h: float, dim: int = 1) -> WeightTable:
    """Stencils of the endpoint orders, outside the fractional range.

    sigma = 2 gives the classical discrete Laplacian (weights 1/h^2 on the
    2N nearest neighbours), sigma = 0 gives minus the identity (no neighbours,
    unit diagonal).
    """
    h = _check_h(h)
    if sigma == 2:
        kernel = np.zeros((3,) * dim)
        for k in range(dim):
            for s in (0, 2):
                idx = [1] * dim
                idx[k] = s
                kernel[tuple(idx)] = 1.0 / h**2
        return WeightTable(2.0, h, dim, 1, kernel, 0.0, 2.0 * dim / h**2)
    if sigma == 0:
        return WeightTable(0.0, h, dim, 1, np.zeros((3,) * dim), 0.0, 1.0)
    raise ValueError(f"limit stencils exist for sigma in {{0, 2}}, got {sigma!r}")
