"""Converge a single ground state and look at everything it certifies.

The solver tunes the central shifted-potential value c = h(0) by bisection
until the field decays instead of crossing zero or diverging, then reads
the frequency from the far field.  A converged state is certified by six
integral identities, a Newton cross-check of the potential, and the
frequency bounds.
"""

import numpy as np

from hartreetrap import (
    ProblemSpec,
    find_ground_state,
    mass_energy,
    newton_potential_check,
    omega_range_check,
    pohozaev_report,
)

d, b = 7, 1.0
spec = ProblemSpec(d=d)
res = find_ground_state(b, spec)

print(f"dimension d = {d}, central value b = {b}")
print(f"shooting parameter c* = {res.c_star:.12f} "
      f"(bracket width {res.bracket_width:.1e})")
print(f"frequency omega      = {res.omega:.12f}")
print(f"reliable radius      = {res.r_reliable:.3f}")

report = pohozaev_report(res)
print("\nintegral identities (relative residuals):")
for name, value in report.residuals.items():
    print(f"  {name:9s} {value:.2e}")
print(f"newton potential cross-check: {newton_potential_check(res):.2e}")

mass, energy = mass_energy(res)
print(f"\nmass = {mass:.8f}, energy = {energy:.8f}")

chk = omega_range_check(res)
print(f"frequency range [{chk.lower:.3f}, {chk.upper}): "
      f"margins {chk.margin_lower:.4f} / {chk.margin_upper:.4f} "
      f"-> {'ok' if chk.passed else 'VIOLATED'}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    traj = res.profile
    mask = traj.r <= res.r_reliable
    fig, ax = plt.subplots(1, 2, figsize=(9, 3.2))
    ax[0].plot(traj.r[mask], traj.f[mask])
    ax[0].set_xlabel("r")
    ax[0].set_ylabel("f")
    ax[0].set_title(f"field profile (d={d}, b={b})")
    ax[1].plot(traj.r[mask], res.omega - traj.h[mask])
    ax[1].set_xlabel("r")
    ax[1].set_ylabel("v = omega - h")
    ax[1].set_title("self-consistent potential")
    fig.tight_layout()
    fig.savefig("ground_state_profile.png", dpi=120)
    print("\nwrote ground_state_profile.png")
except ImportError:
    print("\n(matplotlib not installed; skipping the plot)")
