"""Acceptance suite: every shipped claim, one test per criterion.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
PASS/FAIL lines.  Two criteria are expected to fail and are reported
honestly rather than loosened:

* Criterion 1 compares against the published singular frequency table at
  +-1e-3; three of the fourteen published entries (d = 7, 12, 20) disagree
  with this solver by 2.6e-3..6.5e-3.  The computed values were
  cross-validated at build time by three independent routes (log-variable
  manifold shooting, raw physical-variable integration with independent
  seeding and event logic, and the large-b limit of the regular solver,
  all agreeing to nine digits).

* Criterion 6 pins the d = 7 sweep window to b in [1e-1, 1e3]; the
  computed curve places its second oscillation extremum at b ~ 1.01e3,
  just outside, leaving one extremum and two frequency crossings inside
  the stated window.  The oscillation itself is real and criterion 7
  verifies its spacing and envelope on a wider window.
"""

import math
import multiprocessing as mp
import time

import numpy as np
import pytest

from hartreetrap import (
    ProblemSpec,
    classify,
    find_excited_state,
    find_ground_state,
    find_singular_state,
    fit_omega_inf_law,
    manifold_eigenvalues,
    newton_potential_check,
    pohozaev_report,
    sweep_omega_b,
    uniqueness_probe,
)
from hartreetrap.analysis import (
    bifurcation_omega,
    count_level_crossings,
    find_curve_extrema,
    omega_lower_bound,
)

_T0 = time.time()
_JOBS = 2

PUBLISHED_OMEGA_INF = {
    7: 5.504, 8: 6.885, 9: 8.161, 10: 9.363, 11: 10.515, 12: 11.623,
    13: 12.717, 14: 13.783, 15: 14.834, 16: 15.873, 17: 16.903,
    18: 17.926, 19: 18.945, 20: 19.955,
}


def _report(num, ok, detail=""):
    print(f"\nACCEPTANCE {num}: {'PASS' if ok else 'FAIL'}  {detail}")


# --- shared expensive computations -------------------------------------------

def _singular_row(d):
    res = find_singular_state(d)
    return d, res.omega_inf, res.c_star


@pytest.fixture(scope="module")
def singular_table():
    with mp.Pool(processes=_JOBS) as pool:
        rows = pool.map(_singular_row, sorted(PUBLISHED_OMEGA_INF))
    return {d: (omega, c) for d, omega, c in sorted(rows)}


def _matrix_point(args):
    d, b = args
    res = find_ground_state(b, ProblemSpec(d=d))
    return {
        "d": d,
        "b": b,
        "omega": res.omega,
        "identity_max": pohozaev_report(res).max_residual,
        "newton": newton_potential_check(res),
    }


@pytest.fixture(scope="module")
def ground_matrix():
    dims = [6, 7, 8, 9, 10, 12, 14, 16, 18, 20]
    bs = np.geomspace(0.05, 20.0, 10)
    points = [(d, float(b)) for d in dims for b in bs]
    with mp.Pool(processes=_JOBS) as pool:
        return pool.map(_matrix_point, points)


@pytest.fixture(scope="module")
def sweep_d7():
    # Covers the criterion-6 window [0.1, 1e3] plus enough extra range for
    # criterion 7 to see three oscillation extrema (the second and third sit
    # near b ~ 1.0e3 and ~1.4e4).
    return sweep_omega_b(7, np.geomspace(0.1, 15000.0, 120), jobs=_JOBS,
                         with_identities=False)


@pytest.fixture(scope="module")
def sweep_d16():
    return sweep_omega_b(16, np.geomspace(0.1, 1000.0, 60), jobs=_JOBS,
                         with_identities=False)


# --- criterion 1: singular frequency table ------------------------------------

def test_criterion_1_table_reproduction(singular_table):
    lines = []
    offenders = []
    for d, ref in PUBLISHED_OMEGA_INF.items():
        omega = singular_table[d][0]
        diff = omega - ref
        lines.append(f"d={d}: computed {omega:.6f} published {ref} "
                     f"diff {diff:+.4f}")
        if abs(diff) > 1e-3:
            offenders.append(d)
    ok = not offenders
    _report(1, ok, f"{14 - len(offenders)}/14 within 1e-3"
            + (f"; offenders {offenders}" if offenders else ""))
    assert ok, (
        "computed singular frequencies disagree with the published table at "
        f"d={offenders} (cross-validated by three independent methods; the "
        "published entries appear inaccurate at the few-1e-3 level):\n"
        + "\n".join(lines))


# --- criterion 2: exponential law of the gap -----------------------------------

def test_criterion_2_gap_law_fit(singular_table):
    fit = fit_omega_inf_law([(d, om) for d, (om, _) in singular_table.items()])
    a_fit, gamma = fit.params["A"], fit.params["gamma"]
    ok = abs(a_fit - 9.64) / 9.64 <= 0.05 and abs(gamma - 0.271) / 0.271 <= 0.05
    _report(2, ok, f"A={a_fit:.3f} (ref 9.64), gamma={gamma:.4f} (ref 0.271)")
    assert ok


# --- criterion 3: small-b branch formula ----------------------------------------

def test_criterion_3_bifurcation():
    bs = [0.02, 0.05, 0.1]
    worst = []
    for d in (6, 7, 10, 16):
        cs = {}
        for b in bs:
            res = find_ground_state(b, ProblemSpec(d=d))
            cs[b] = abs(res.omega - bifurcation_omega(b, d)) / b**3
        # C must be bounded and not blow up under b-refinement
        stable = cs[0.02] <= 2.0 * max(cs[0.05], cs[0.1]) + 1e-3
        bounded = max(cs.values()) < 1.0
        worst.append((d, max(cs.values()), stable and bounded))
    ok = all(flag for _, _, flag in worst)
    _report(3, ok, "; ".join(f"d={d}: C={c:.2e}" for d, c, _ in worst))
    assert ok, worst


# --- criteria 4 + 5: range bounds and identity suite on a (d, b) matrix ---------

def test_criterion_4_range_bounds(ground_matrix):
    bad = []
    for row in ground_matrix:
        lower = omega_lower_bound(row["d"])
        if not (lower - 1e-6 <= row["omega"] < row["d"]):
            bad.append(row)
    ok = not bad and len(ground_matrix) == 100
    _report(4, ok, f"{len(ground_matrix) - len(bad)}/{len(ground_matrix)} "
            "states inside bounds")
    assert ok, bad


def test_criterion_5_identity_suite(ground_matrix):
    worst_ident = max(row["identity_max"] for row in ground_matrix)
    worst_newton = max(row["newton"] for row in ground_matrix)
    ok = worst_ident < 1e-6 and worst_newton < 1e-6
    _report(5, ok, f"max identity residual {worst_ident:.2e}, "
            f"max newton deviation {worst_newton:.2e}")
    assert ok


# --- criteria 6 + 7: shape of the frequency curve -------------------------------

def test_criterion_6_shape_transition(singular_table, sweep_d7, sweep_d16):
    # Stated window: b in [1e-1, 1e3].  The computed d=7 curve places its
    # second extremum at b ~ 1.01e3, a hair outside, so the window holds one
    # extremum and two crossings; the counts asked for appear only on a
    # wider window (criterion 7 measures them there).  Reported honestly.
    omega_inf = singular_table[7][0]
    window_7 = [rec for rec in sweep_d7 if rec.b <= 1000.0]
    extrema_7 = find_curve_extrema(window_7)
    crossings = count_level_crossings(window_7, omega_inf)
    extrema_16 = find_curve_extrema(sweep_d16)
    ok = len(extrema_7) >= 2 and crossings >= 3 and len(extrema_16) == 0
    _report(6, ok, f"d=7 on [0.1, 1e3]: {len(extrema_7)} extrema, "
            f"{crossings} crossings of omega_inf; d=16: {len(extrema_16)} "
            "extrema")
    assert ok, (
        "on the stated window the computed d=7 curve has "
        f"{len(extrema_7)} extrema at {[(round(b, 1), k) for b, _, k in extrema_7]} "
        f"and {crossings} omega_inf crossings (second extremum at b ~ 1.01e3 "
        "falls just outside); d=16 extrema: "
        f"{len(extrema_16)}")


def test_criterion_7_large_b_oscillation(singular_table, sweep_d7):
    eig = manifold_eigenvalues(7)
    omega_inf = singular_table[7][0]
    extrema = [(b, om) for b, om, _ in find_curve_extrema(sweep_d7)
               if b >= 1.0]
    assert len(extrema) >= 3, extrema
    half_log_b = [0.5 * math.log(b) for b, _ in extrema]
    spacings = np.diff(half_log_b)
    target = math.pi / eig.alpha1
    spacing_ok = np.all(np.abs(spacings - target) <= 0.03 * target)
    amp = np.abs(np.array([om for _, om in extrema]) - omega_inf)
    slope = np.polyfit(np.log([b for b, _ in extrema]), np.log(amp), 1)[0]
    slope_ok = abs(slope - (-0.25)) <= 0.05
    ok = bool(spacing_ok and slope_ok)
    _report(7, ok, f"spacings {np.round(spacings, 4)} vs pi/alpha1 "
            f"{target:.4f}; envelope slope {slope:.4f} vs -0.25")
    assert ok, (spacings, target, slope)


# --- criterion 8: excited ladder and uniqueness ----------------------------------

def test_criterion_8_excited_ladder():
    from test_shooting import LADDER_D7_B1

    spec = ProblemSpec(d=7)
    states = [find_excited_state(1.0, n, spec) for n in range(4)]
    cs = [s.c_star for s in states]
    nodes_ok = all(s.n == n for n, s in enumerate(states))
    order_ok = all(x < y for x, y in zip(cs, cs[1:]))
    frozen_ok = all(
        math.isclose(s.c_star, LADDER_D7_B1[n][0], rel_tol=1e-9)
        and math.isclose(s.omega, LADDER_D7_B1[n][1], rel_tol=1e-9)
        for n, s in enumerate(states))
    rep = uniqueness_probe(1.0, spec, result=states[0], grid_points=21)
    ok = nodes_ok and order_ok and frozen_ok and rep.transitions == 1
    _report(8, ok, f"c_star ladder {[round(c, 6) for c in cs]}, "
            f"uniqueness transitions {rep.transitions}")
    assert ok


# --- criterion 9: classification robustness --------------------------------------

def _probe_batch(seed):
    rng = np.random.default_rng(seed)
    dims = [6, 7, 10, 13, 16, 20]
    flips = 0
    outcomes = []
    for _ in range(2500):
        d = int(rng.choice(dims))
        b = 10.0 ** rng.uniform(-2.0, 2.0)
        if rng.uniform() < 0.15:
            c = -(10.0 ** rng.uniform(-2.0, 1.0))
        else:
            c = 10.0 ** rng.uniform(-2.0, 3.0)
        base = ProblemSpec(d=d)
        half = ProblemSpec(d=d, rtol=base.rtol / 2.0, atol=base.atol / 2.0)
        kind_a = classify(b, c, 0, base).kind
        kind_b = classify(b, c, 0, half).kind
        outcomes.append(kind_a.value)
        if kind_a is not kind_b:
            flips += 1
    return flips, outcomes


def test_criterion_9_trichotomy_robustness():
    seeds = [20260810, 20260811, 20260812, 20260813]
    with mp.Pool(processes=_JOBS) as pool:
        results = pool.map(_probe_batch, seeds)
    flips = sum(r[0] for r in results)
    kinds = [k for r in results for k in r[1]]
    n_total = len(kinds)
    counts = {k: kinds.count(k) for k in sorted(set(kinds))}
    ok = flips == 0 and n_total == 10_000
    _report(9, ok, f"{n_total} probes, {flips} classification flips; "
            f"mix {counts}")
    assert ok
    # the sample must actually exercise both branches of the trichotomy
    assert counts.get("CrossesZero", 0) > 1000
    assert counts.get("DivergesPositive", 0) > 1000


# --- criterion 10: runtime --------------------------------------------------------

def test_criterion_10_runtime():
    elapsed = time.time() - _T0
    ok = elapsed < 1800.0
    _report(10, ok, f"acceptance wall time {elapsed:.0f} s (< 1800 s)")
    assert ok
