"""Lax-Friedrichs transport and a small controlled (Isaacs) problem.

Run: python demos/05_convection_and_isaacs.py
"""
import numpy as np

from fraclap import (
    ControlledCoefficients,
    DiffusionTerm,
    Problem,
    SchemeConfig,
    builtin_initial,
    builtin_nonlinearity,
    relative_linf_error,
    solve,
    transport_hamiltonian,
)

# Pure transport u_t + u_x = 0: the scheme is first order and smears the profile.
H = transport_hamiltonian([1.0])
for h in (1 / 4, 1 / 8, 1 / 16):
    P = Problem(((-10.0, 10.0),), h, lambda x: np.exp(-x * x), (), hamiltonian=H)
    traj = solve(P, SchemeConfig(1.0, scheme="convection"))
    err = relative_linf_error(traj.final, lambda x: np.exp(-(x - 1.0) ** 2), ((-3.0, 5.0),))
    print(f"transport h={h:<7g} relative error {err:.3e}")

# Fractional diffusion plus drift
P = Problem(((-10.0, 10.0),), 0.125, builtin_initial("g2"),
            (DiffusionTerm(1.2, builtin_nonlinearity("F3")),), hamiltonian=transport_hamiltonian([0.5]))
print("diffusion + drift, final max:", f"{solve(P, SchemeConfig(1.0, scheme='convection')).final.values.max():.6f}")

# A sup-inf over two controls for each player.  Each entry is
# (diffusion coefficient a, drift b, discount c, source f).
table = {
    (0, 0): (1.0, 0.0, 0.0, 0.0),
    (1, 0): (0.2, 0.5, 0.0, 0.1),
    (0, 1): (0.5, -0.5, 0.5, 0.0),
    (1, 1): (0.0, 0.0, 1.0, -0.1),
}
ctl = ControlledCoefficients.constant(0.8, table)
P = Problem(((-4.0, 4.0),), 0.125, builtin_initial("g2"), (), controls=ctl)
traj = solve(P, SchemeConfig(0.5, scheme="isaacs"))
print(f"isaacs: {traj.steps} steps, tau {traj.tau:.4f}, sup norm {traj.sup_norms[-1]:.6f} "
      f"(bound {traj.stability_bounds[-1]:.6f})")
