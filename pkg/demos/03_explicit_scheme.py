"""Explicit monotone time stepping with a degenerate nonlinearity.

With F(l) = max(l, 0) the solution can only grow, and a positive peak
that already sits at the maximum of the data never moves.

Run: python demos/03_explicit_scheme.py
"""
import numpy as np

from fraclap import DiffusionTerm, Problem, SchemeConfig, builtin_initial, builtin_nonlinearity, solve

problem = Problem(
    bounds=((-20.0, 20.0),),
    h=2.0**-5,
    initial=builtin_initial("g2"),
    diffusion=(DiffusionTerm(0.5, builtin_nonlinearity("F1")),),
)
traj = solve(problem, SchemeConfig(t_final=0.5, safety=0.9, snapshot_times=(0.0, 0.25)))
print(f"{traj.steps} steps of size {traj.tau:.4f} (CFL bound {traj.cfl_bound:.4f})")
for t, U in zip(traj.times, traj.snapshots):
    i, j = U.index_of(-1.0), U.index_of(1.0)
    print(f"t = {t:.3f}: U(-1) = {U.values[i]:.12f}, U(1) = {U.values[j]:.12f}, U(0) = {U.values[U.index_of(0.0)]:+.6f}")
print("monotone in time:", all(np.all(b.values >= a.values) for a, b in zip(traj.snapshots, traj.snapshots[1:])))
print("sup norm within stability bound:", bool(np.all(traj.sup_norms <= traj.stability_bounds + 1e-12)))
