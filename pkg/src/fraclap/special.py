"""Special-function kernels used by the quadrature weights.

Everything here is vectorised over numpy arrays and works in double
precision.  The three pieces are

* ``gamma_ratio``      -- Gamma(m - s/2) / Gamma(m + 1 + s/2) without overflow,
* ``zeta_value``       -- zeta(1 + s) for s in (0, 2),
* ``scaled_bessel_i``  -- exp(-x) I_m(x) for all orders m = 0..M at once.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import bernoulli, comb, gammaln

__all__ = [
    "check_sigma",
    "gamma_ratio",
    "gamma_ratio_tail",
    "zeta_value",
    "scaled_bessel_i",
]

# Below this argument the log-Gamma difference is used directly; above it the
# Stirling expansion of the difference (no cancellation between two large logs).
_STIRLING_CUTOFF = 20.0
_STIRLING_TERMS = 12
_BERNOULLI = bernoulli(_STIRLING_TERMS + 1)


def check_sigma(sigma: float) -> float:
    sigma = float(sigma)
    if not (0.0 < sigma < 2.0) or not math.isfinite(sigma):
        raise ValueError(f"order sigma must lie in (0, 2), got {sigma!r}")
    return sigma


def _bernoulli_poly(n: int, x: float) -> float:
    return sum(comb(n, k, exact=True) * _BERNOULLI[k] * x ** (n - k) for k in range(n + 1))


def _log_gamma_ratio_stirling(z: np.ndarray, a: float, b: float) -> np.ndarray:
    """log Gamma(z + a) - log Gamma(z + b) for large z.

    Uses lnGamma(z + a) ~ (z + a - 1/2) ln z - z + ln(2 pi)/2
    + sum_k (-1)^(k+1) B_{k+1}(a) / (k (k+1) z^k).
    """
    out = (a - b) * np.log(z)
    zinv = 1.0 / z
    zpow = np.ones_like(z)
    for k in range(1, _STIRLING_TERMS + 1):
        zpow = zpow * zinv
        coef = (_bernoulli_poly(k + 1, a) - _bernoulli_poly(k + 1, b)) / (k * (k + 1))
        out = out + (-1) ** (k + 1) * coef * zpow
    return out


def gamma_ratio(m, sigma: float):
    """Gamma(m - sigma/2) / Gamma(m + 1 + sigma/2) for integers m >= 1.

    The ratio is formed as exp(lnGamma(m - sigma/2) - lnGamma(m + 1 + sigma/2)),
    so it stays finite for any m.  For ``sigma == 1`` the exact rational form
    1 / ((m + 1/2)(m - 1/2)) is returned instead.
    """
    sigma = check_sigma(sigma)
    scalar = np.ndim(m) == 0
    m_arr = np.atleast_1d(np.asarray(m))
    if not np.issubdtype(m_arr.dtype, np.integer):
        if np.any(m_arr != np.round(m_arr)):
            raise ValueError("m must be integer valued")
    m_arr = m_arr.astype(np.float64)
    if np.any(m_arr < 1):
        raise ValueError("m must be >= 1")

    if sigma == 1.0:
        out = 1.0 / ((m_arr + 0.5) * (m_arr - 0.5))
    else:
        out = np.empty_like(m_arr)
        small = m_arr < _STIRLING_CUTOFF
        ms = m_arr[small]
        out[small] = np.exp(gammaln(ms - sigma / 2) - gammaln(ms + 1 + sigma / 2))
        big = ~small
        out[big] = np.exp(_log_gamma_ratio_stirling(m_arr[big], -sigma / 2, 1 + sigma / 2))
    return float(out[0]) if scalar else out


def gamma_ratio_tail(M: int, sigma: float) -> float:
    """Exact value of sum_{m >= M} Gamma(m - sigma/2) / Gamma(m + 1 + sigma/2).

    The summand telescopes: the sum equals Gamma(M - sigma/2) / (sigma Gamma(M + sigma/2)).
    """
    sigma = check_sigma(sigma)
    if M < 1:
        raise ValueError("M must be >= 1")
    if M < _STIRLING_CUTOFF:
        logr = gammaln(M - sigma / 2) - gammaln(M + sigma / 2)
    else:
        logr = _log_gamma_ratio_stirling(np.array([float(M)]), -sigma / 2, sigma / 2)[0]
    return float(np.exp(logr) / sigma)


# Euler-Maclaurin remainder uses Bernoulli numbers B_2..B_{2*_EM_TERMS}.
_ZETA_PARTIAL = 1000
_EM_TERMS = 6


def zeta_value(sigma: float) -> float:
    """Riemann zeta at 1 + sigma, sigma in (0, 2).

    Partial sum up to ``_ZETA_PARTIAL`` terms, then the integral remainder
    with Euler-Maclaurin corrections.  Absolute error well below 1e-14.
    """
    sigma = check_sigma(sigma)
    s = 1.0 + sigma
    M = _ZETA_PARTIAL
    head = math.fsum(np.arange(1, M, dtype=np.float64) ** (-s))
    # sum_{m >= M} m^-s = M^(1-s)/(s-1) + M^-s/2 + sum_k B_2k/(2k)! s(s+1)..(s+2k-2) M^(-s-2k+1)
    tail = M ** (1 - s) / (s - 1) + 0.5 * M ** (-s)
    rising = s
    for k in range(1, _EM_TERMS + 1):
        term = _BERNOULLI_EM[2 * k] / math.factorial(2 * k) * rising * M ** (-s - 2 * k + 1)
        tail += term
        rising *= (s + 2 * k - 1) * (s + 2 * k)
    return head + tail


_BERNOULLI_EM = bernoulli(2 * _EM_TERMS)


_SERIES_MAX_X = 1.0
_SERIES_TERMS = 20
_ASYM_TERMS = 40


def _bessel_series(mmax: int, x: np.ndarray) -> np.ndarray:
    # exp(-x) (x/2)^m / m! * sum_k (x^2/4)^k m! / (k! (m+k)!)
    m = np.arange(mmax + 1, dtype=np.float64)
    with np.errstate(divide="ignore"):
        logx2 = np.log(x / 2.0)
    lead = np.exp(np.outer(logx2, m) - gammaln(m + 1) - x[:, None])
    q = (x * x / 4.0)[:, None]
    term = np.ones((x.size, mmax + 1))
    total = np.ones((x.size, mmax + 1))
    for k in range(1, _SERIES_TERMS + 1):
        term = term * q / (k * (m + k))
        total += term
    return lead * total


def _bessel_asymptotic(mmax: int, x: np.ndarray) -> np.ndarray:
    # Hankel expansion; only called when x is large compared with mmax**2.
    mu = 4.0 * np.arange(mmax + 1, dtype=np.float64) ** 2
    inv8x = (1.0 / (8.0 * x))[:, None]
    term = np.ones((x.size, mmax + 1))
    total = np.ones((x.size, mmax + 1))
    for k in range(1, _ASYM_TERMS + 1):
        term = -term * (mu - (2 * k - 1) ** 2) * inv8x / k
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    return total / np.sqrt(2.0 * np.pi * x)[:, None]


def _bessel_miller(mmax: int, x: np.ndarray) -> np.ndarray:
    """Backward recurrence I_{n-1} = I_{n+1} + (2n/x) I_n, normalised by
    exp(-x) (I_0 + 2 sum_{n>=1} I_n) = 1."""
    nstart = int(mmax + math.ceil(9.0 * math.sqrt(float(x.max()))) + 30)
    out = np.zeros((x.size, mmax + 1))
    nxt = np.zeros_like(x)
    cur = np.full_like(x, 1e-300)
    norm = np.zeros_like(x)
    for n in range(nstart, 0, -1):
        # cur holds I_n, nxt holds I_{n+1}
        if n <= mmax:
            out[:, n] = cur
        norm += 2.0 * cur
        prev = nxt + (2.0 * n / x) * cur
        nxt, cur = cur, prev
        big = cur > 1e250
        if np.any(big):
            scale = np.where(big, 1e-250, 1.0)
            cur *= scale
            nxt *= scale
            norm *= scale
            out *= scale[:, None]
    out[:, 0] = cur
    norm += cur
    return out / norm[:, None]


def scaled_bessel_i(mmax: int, x) -> np.ndarray:
    """Table of exp(-x) I_m(x) for m = 0..mmax.

    Parameters
    ----------
    mmax : int
        Highest order required.
    x : array_like
        Nonnegative arguments.

    Returns
    -------
    ndarray, shape (len(x), mmax + 1)
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise ValueError("arguments must be finite and nonnegative")
    mmax = int(mmax)
    out = np.empty((x.size, mmax + 1))
    zero = x == 0.0
    out[zero] = 0.0
    out[zero, 0] = 1.0
    x_asym = max(100.0, 2.0 * mmax * mmax)
    small = (~zero) & (x <= _SERIES_MAX_X)
    large = x > x_asym
    mid = ~(zero | small | large)
    if np.any(small):
        out[small] = _bessel_series(mmax, x[small])
    if np.any(mid):
        out[mid] = _bessel_miller(mmax, x[mid])
    if np.any(large):
        out[large] = _bessel_asymptotic(mmax, x[large])
    return out
