"""Applying the discrete operator and checking second-order accuracy.

Run: python demos/02_operator.py
"""
import numpy as np
from scipy import special

from fraclap import GridFunction, apply_fractional_field, observed_orders, weights_1d

sigma = 1.0


def phi(x):
    return 1.0 / (1.0 + x * x)


def exact(x):
    # closed form of -(-Delta)^(sigma/2) applied to 1/(1+x^2)
    return -special.gamma(1 + sigma) * np.cos((1 + sigma) * np.arctan(x)) / (1 + x * x) ** ((1 + sigma) / 2)


errors = []
for h in (1 / 4, 1 / 8, 1 / 16, 1 / 32):
    U = GridFunction.sample(phi, ((-1000.0, 1000.0),), h)
    # the FFT path is a fast evaluation of the same stencil sum
    V = apply_fractional_field(weights_1d(sigma, h, U.shape[0] - 1), U, method="fft")
    mask = U.window_mask(((-2.0, 2.0),))
    errors.append(float(np.max(np.abs(V.values[mask] - exact(U.axis(0)[mask])))))
    print(f"h = {h:<8g} sup error on [-2, 2]: {errors[-1]:.3e}")
print("observed orders:", ", ".join(f"{r:.2f}" for r in observed_orders(errors)))
