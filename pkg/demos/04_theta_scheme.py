"""The theta scheme on the linear sigma = 1 problem with a known solution.

Run: python demos/04_theta_scheme.py
"""
from fraclap import (
    DiffusionTerm,
    Problem,
    SchemeConfig,
    builtin_initial,
    builtin_nonlinearity,
    exact_linear_sigma1,
    relative_linf_error,
    solve,
)

exact = exact_linear_sigma1()
for theta in (0.0, 0.5, 1.0):
    line = []
    for h in (0.5, 0.25, 0.125):
        P = Problem(((-60.0, 60.0),), h, builtin_initial("g3"), (DiffusionTerm(1.0, builtin_nonlinearity("F3")),))
        traj = solve(P, SchemeConfig(1.0, scheme="theta", theta=theta, tau=h * h))
        err = relative_linf_error(traj.final, lambda x: exact(x, 1.0), ((-10.0, 10.0),))
        iters = max((fp.iterations for fp in traj.fixed_point), default=0)
        line.append(f"h={h:<6g} err={err:.3e} (max sweeps {iters})")
    print(f"theta={theta}: " + "; ".join(line))
