"""How the frequency curve omega(b) changes shape with dimension.

For 7 <= d <= 15 the curve spirals into the singular frequency omega_inf
with decaying oscillations (infinitely many states share that frequency);
from d = 16 on the oscillations vanish and the curve decreases
monotonically.  This demo sweeps a modest grid; push b_hi and the point
count up to resolve more oscillation periods.
"""

import numpy as np

from hartreetrap import find_singular_state, sweep_omega_b
from hartreetrap.analysis import count_level_crossings, find_curve_extrema

grid = np.geomspace(0.5, 300.0, 40)

for d in (7, 16):
    omega_inf = find_singular_state(d).omega_inf
    records = sweep_omega_b(d, grid, jobs=2, with_identities=False)
    extrema = find_curve_extrema(records)
    crossings = count_level_crossings(records, omega_inf)
    print(f"d = {d}: omega_inf = {omega_inf:.4f}, "
          f"{len(extrema)} extrema, {crossings} crossings on this window")
    for b_star, om_star, kind in extrema:
        print(f"    {kind} at b = {b_star:8.2f}, omega = {om_star:.6f}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 2, figsize=(9, 3.2))
    for ax, d in zip(axes, (7, 16)):
        omega_inf = find_singular_state(d).omega_inf
        records = sweep_omega_b(d, grid, jobs=2, with_identities=False)
        ax.semilogx([r.b for r in records], [r.omega for r in records], ".-")
        ax.axhline(omega_inf, color="k", lw=0.6, ls="--")
        ax.set_xlabel("b")
        ax.set_ylabel("omega")
        ax.set_title(f"d = {d}")
    fig.tight_layout()
    fig.savefig("frequency_curves.png", dpi=120)
    print("wrote frequency_curves.png")
except ImportError:
    print("(matplotlib not installed; skipping the plot)")
