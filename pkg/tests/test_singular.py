"""Singular states: frequencies, mapping, asymptotic law, autonomous limit."""

import math

import numpy as np
import pytest

from hartreetrap import (
    ClassKind,
    find_singular_state,
    fit_omega_inf_law,
    singular_profile_to_physical,
)
from hartreetrap.errors import FitDomainError
from hartreetrap.singular import (
    autonomous_energy,
    classify_singular,
    default_singular_spec,
    omega_drift,
    run_autonomous,
)

# Singular ground-state frequencies, cross-validated at first build by three
# independent routes (log-variable shooting, a raw physical-variable
# integration with its own seeding/bisection, and the large-b limit of the
# regular solver).  The published table agrees within ~1e-3 for most
# dimensions; see the acceptance suite for the full comparison.
OMEGA_INF = {
    7: 5.501312432,
    9: 8.160117137,
    12: 11.629459292,
    16: 15.873417813,
    20: 19.957633726,
}


@pytest.mark.parametrize("d", [7, 12, 20])
def test_singular_frequency_spot_values(d):
    res = find_singular_state(d)
    assert res.omega_inf == pytest.approx(OMEGA_INF[d], abs=5e-8)
    assert res.omega_inf < d
    assert res.n == 0 == res.profile.node_count


def test_singular_ground_positive_profile(singular_d7):
    ft = singular_d7.profile.f + 1.0
    assert np.all(ft[singular_d7.profile.r <= math.log(singular_d7.r_reliable)]
                  > 0.0)


def test_singular_physical_h_decreasing(singular_d7):
    # Mapped h = 2(d-4)(1+xi) e^{-2t} is non-increasing in r.
    traj = singular_d7.profile
    h_phys = 2.0 * 3.0 * (traj.h + 1.0) * np.exp(-2.0 * traj.r)
    assert np.all(np.diff(h_phys) < 0.0)


def test_singular_omega_drift_small(singular_d7):
    assert omega_drift(singular_d7) < 1e-8


def test_singular_node_ladder_d7():
    states = [find_singular_state(7, n) for n in range(3)]
    cs = [s.c_star for s in states]
    assert cs == sorted(cs) and len(set(cs)) == 3
    for n, s in enumerate(states):
        assert s.n == n


@pytest.mark.parametrize("c", [-2.0, -0.5, 0.0])
def test_singular_no_crossing_for_nonpositive_amplitude(c):
    spec = default_singular_spec(7)
    cls = classify_singular(c, 0, spec)
    assert cls.kind is ClassKind.DIVERGES_POSITIVE
    assert cls.nodes_before == 0


def test_singular_profile_mapping_origin_limit(singular_d7):
    # f r^2 -> 2(d-4) near the origin.
    r = 2.0 * math.exp(singular_d7.profile.r[0])
    f, h = singular_profile_to_physical(singular_d7, r)
    assert f * r * r == pytest.approx(6.0, rel=1e-4)
    assert h * r * r == pytest.approx(6.0, rel=1e-4)


def test_singular_profile_mapping_definition(singular_d7):
    f, h = singular_profile_to_physical(singular_d7, 1.0)
    y = singular_d7.profile.dense(0.0)  # t = ln 1 = 0
    assert f == pytest.approx(6.0 * (1.0 + y[0]), rel=1e-12)
    assert h == pytest.approx(6.0 * (1.0 + y[2]), rel=1e-12)


def test_singular_profile_mapping_out_of_range(singular_d7):
    with pytest.raises(ValueError):
        singular_profile_to_physical(singular_d7, 1e-9)
    with pytest.raises(ValueError):
        singular_profile_to_physical(singular_d7, -1.0)


def test_zero_amplitude_forced_response():
    # At c = 0 the trajectory is the pure inverse-square solution perturbed
    # by the forcing alone: eta(t) ~ d/(8(3d-8)) e^{4t} while e^{4t} is small.
    from hartreetrap.ode import EventSetup, integrate, manifold_start_singular
    from dataclasses import replace

    d = 7
    # The truncated start leaks an unstable-mode component that pollutes the
    # forced response at relative level e^{t0 - t}; start deep enough to see
    # the clean coefficient, with atol below the e^{4 t0} forcing scale.
    spec = replace(default_singular_spec(d), r_start=math.exp(-10.0),
                   atol=1e-22)
    start = manifold_start_singular(0.0, spec)
    traj = integrate(start, spec, EventSetup(node_stop=1, decay_floor=None))
    coef = d / (8.0 * (3 * d - 8))
    t_probe = -2.0
    i = int(np.argmin(np.abs(traj.r - t_probe)))
    t_i = traj.r[i]
    assert t_i == pytest.approx(t_probe, abs=0.2)
    assert traj.f[i] / math.exp(4.0 * t_i) == pytest.approx(coef, rel=1e-3)


def test_manifold_sign_convention(singular_d7):
    # ft = 1 - c r^lam + O(r^4): positive amplitude pushes ft below 1.
    traj = singular_d7.profile
    i = 4  # still deep in the linear regime
    t_i = traj.r[i]
    lam = 3.0
    approx = -singular_d7.c_star * math.exp(lam * t_i)
    assert traj.f[i] == pytest.approx(approx, rel=2e-2)
    assert traj.h[i] == pytest.approx(-2.0 * approx, rel=2e-2)


# --- exponential law of the frequency gap -------------------------------------

def test_fit_law_recovers_synthetic_data():
    table = [(d, d - 2.0 * math.exp(-0.3 * d)) for d in range(7, 21)]
    fit = fit_omega_inf_law(table)
    assert fit.params["A"] == pytest.approx(2.0, rel=1e-12)
    assert fit.params["gamma"] == pytest.approx(0.3, rel=1e-12)
    assert fit.residual < 1e-12


def test_fit_law_on_published_values():
    published = [(7, 5.504), (8, 6.885), (9, 8.161), (10, 9.363), (11, 10.515),
                 (12, 11.623), (13, 12.717), (14, 13.783), (15, 14.834),
                 (16, 15.873), (17, 16.903), (18, 17.926), (19, 18.945),
                 (20, 19.955)]
    fit = fit_omega_inf_law(published)
    assert fit.params["A"] == pytest.approx(9.64, rel=0.05)
    assert fit.params["gamma"] == pytest.approx(0.271, rel=0.05)


def test_fit_law_rejects_bad_domain():
    with pytest.raises(FitDomainError):
        fit_omega_inf_law([(7, 7.5), (8, 6.0), (9, 8.0)])
    with pytest.raises(FitDomainError):
        fit_omega_inf_law([(7, 5.5), (8, 6.9)])


# --- autonomous limit harness ---------------------------------------------------

@pytest.mark.parametrize("d", [7, 10, 16])
def test_autonomous_energy_decreasing(d):
    s, y, energy = run_autonomous(d)
    assert energy[0] == pytest.approx(-(d - 4.0), rel=1e-10)
    assert np.max(np.diff(energy)) < 1e-10


def test_autonomous_field_oscillates_with_shrinking_amplitude():
    s, y, _ = run_autonomous(7, s_end=6.0)
    ft = y[0]
    sign_changes = np.flatnonzero(ft[:-1] * ft[1:] < 0.0)
    assert len(sign_changes) >= 3
    # consecutive arch amplitudes decay
    arches = []
    for a, b in zip(sign_changes, sign_changes[1:]):
        arches.append(np.max(np.abs(ft[a:b])))
    assert all(x > y for x, y in zip(arches, arches[1:]))


def test_autonomous_energy_value_at_fixed_point():
    y0 = np.array([1.0, 0.0, 1.0, 0.0])
    assert autonomous_energy(y0, 9) == -(9 - 4.0)
