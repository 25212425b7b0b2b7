"""Singular states and the exponential law of the frequency gap.

Solutions diverging like 2(d-4)/r^2 at the origin are shot from the
unstable manifold of the origin fixed point in log-radius variables.
Their frequencies approach the dimension from below, with the gap
d - omega_inf falling off exponentially in d.
"""

from hartreetrap import find_singular_state, fit_omega_inf_law

dims = range(7, 15)
table = []
print(f"{'d':>3} {'omega_inf':>12} {'d - omega_inf':>14} {'c_star':>10}")
for d in dims:
    res = find_singular_state(d)
    table.append((d, res.omega_inf))
    print(f"{d:>3} {res.omega_inf:>12.6f} {d - res.omega_inf:>14.6f} "
          f"{res.c_star:>10.5f}")

fit = fit_omega_inf_law(table)
print(f"\ngap law  d - omega_inf = A exp(-gamma d):")
print(f"  A     = {fit.params['A']:.4f}")
print(f"  gamma = {fit.params['gamma']:.4f}")
print(f"  max relative residual = {fit.residual:.3f}")
