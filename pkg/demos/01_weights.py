"""Quadrature weights of the discrete fractional Laplacian.

Run: python demos/01_weights.py
"""
import math

import numpy as np

from fraclap import mass_constant, weights_1d, weights_nd

# In one dimension the weights have a closed form in Gamma-function ratios.
# For sigma = 1 they reduce to 1 / (pi h (j^2 - 1/4)).
t = weights_1d(1.0, 1.0, 6)
for j in range(1, 7):
    print(f"kappa_{j} = {t.kappa(j):.12f}   closed form {1 / (math.pi * (j * j - 0.25)):.12f}")

# The diagonal entry carries the total mass, including the part of the kernel
# beyond the truncation radius.  Compare the tail rules on a short stencil.
for tail in ("zeta", "exact", "none"):
    print(f"tail={tail:5s} diagonal mass {weights_1d(1.0, 1.0, 20, tail=tail).diagonal_mass:.12f}")
print(f"4/pi                     {4 / math.pi:.12f}")

# Two-dimensional weights come from a Bessel-function integral.  They are
# positive, symmetric under reflections and diagonal swaps, and scale like h^-sigma.
w2 = weights_nd(0.7, 0.5, 2, 4)
K = w2.kernel
print("2d kernel symmetric:", np.array_equal(K, K.T) and np.array_equal(K, K[::-1]))
print(f"C_sigma h^-sigma = {mass_constant(0.7, 2) * 0.5 ** -0.7:.10f}, diagonal mass = {w2.diagonal_mass:.10f}")
