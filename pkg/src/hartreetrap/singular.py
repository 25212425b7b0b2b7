"""Singular stationary states in log-radius variables.

Solutions diverging like 2(d-4)/r^2 at the origin are shot from the
one-dimensional unstable manifold of the origin fixed point in the
(eta, xi) variables of :mod:`.ode`, with the manifold amplitude c playing
the role of the shooting parameter:

  * every c <= 0 gives a strictly positive, growing field (no crossing),
  * large c > 0 makes ft = 1 + eta oscillate with decreasing amplitude,

so the same trichotomy bisection as in the regular problem converges the
n-node singular state.  The physical field and potential are recovered via
f = 2(d-4) ft / r^2, h = 2(d-4) ht / r^2, and the limit
omega_inf = lim h(r) is read from the same exact far-field formula as for
regular states once ft has decayed.

The c -> infinity limit of the shifted system is autonomous in
s = ln(c^(1/lam) r); it carries the Lyapunov-like energy

    E = ft'^2 + ht'^2/2 - 2(d-4) ft^2 - (d-4) ht^2 + 2(d-4) ht ft^2,

which decreases monotonically from E(-inf) = -(d-4).  It is exposed here
only as a property-test harness, not as a production path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import solve_ivp

from .errors import BracketError, ExtractionError, FitDomainError, NodeCountError
from .ode import (
    EventSetup,
    Mode,
    ProblemSpec,
    Termination,
    Trajectory,
    integrate,
    manifold_eigenvalues,
    manifold_start_singular,
    MANIFOLD_AMPLITUDE_CAP,
    MANIFOLD_FORCING_CAP,
)
from .shooting import ClassKind, Classification, default_c_tol
from .analysis import FitReport

# ft-scale is 1 by construction; floors and gates mirror the regular case.
FLOOR_FACTOR = 1e-10
TAIL_GATE = 1e-8
_MAX_DOUBLINGS = 200


@dataclass(frozen=True)
class SingularResult:
    """A converged singular state in log variables."""

    d: int
    c_star: float
    n: int
    omega_inf: float
    profile: Trajectory
    bracket_width: float
    r_reliable: float
    spec: ProblemSpec


def default_singular_spec(d: int) -> ProblemSpec:
    # t0 = ln(r_start) sits at the validity caps: any smaller r_start buries
    # the manifold tag |c| e^{lam t0} under atol and blurs c_star (omega_inf
    # is insensitive, but the reported amplitude would drift).
    return ProblemSpec(d=d, mode=Mode.SINGULAR, r_start=1e-2)


def _amplitude_spec(spec: ProblemSpec, c: float) -> ProblemSpec:
    """Shrink r_start until the manifold start is valid for amplitude c."""
    lam = manifold_eigenvalues(spec.d).lam
    r_cap = MANIFOLD_FORCING_CAP ** 0.25
    if c != 0.0:
        r_cap = min(r_cap, (MANIFOLD_AMPLITUDE_CAP / abs(c)) ** (1.0 / lam))
    r_cap *= 0.99  # margin against round-off at the validity boundary
    if spec.r_start <= r_cap:
        return spec
    return replace(spec, r_start=r_cap)


def _probe(c: float, n_target: int, spec: ProblemSpec,
           with_floor: bool = True) -> Trajectory:
    spec_eff = _amplitude_spec(spec, c)
    start = manifold_start_singular(c, spec_eff)
    events = EventSetup(node_stop=n_target + 1,
                        decay_floor=FLOOR_FACTOR if with_floor else None,
                        f_scale=1.0)
    return integrate(start, spec_eff, events)


def classify_singular(c: float, n_target: int, spec: ProblemSpec,
                      with_floor: bool = True) -> Classification:
    """Trichotomy classification of ft = 1 + eta for manifold amplitude c."""
    if spec.mode is not Mode.SINGULAR:
        raise ValueError("classify_singular requires a singular-mode spec")
    traj = _probe(c, n_target, spec, with_floor=with_floor)
    term = traj.termination
    if term is Termination.SIGN_CHANGE_F:
        return Classification(ClassKind.CROSSES_ZERO, traj.r_end, traj.node_count - 1)
    if term is Termination.POSITIVE_MINIMUM:
        return Classification(ClassKind.DIVERGES_POSITIVE, traj.r_end, traj.node_count)
    if term is Termination.NEGATIVE_MAXIMUM:
        return Classification(ClassKind.DIVERGES_NEGATIVE, traj.r_end, traj.node_count)
    if term is Termination.BLOW_UP:
        kind = ClassKind.DIVERGES_POSITIVE if traj.f[-1] + 1.0 > 0 \
            else ClassKind.DIVERGES_NEGATIVE
        return Classification(kind, traj.r_end, traj.node_count)
    if term is Termination.DECAYED_BELOW_FLOOR:
        return Classification(ClassKind.DECAYS, traj.r_end, traj.node_count)
    raise BracketError(
        f"singular probe reached t={traj.r_end:g} without a deciding event; "
        "increase r_max")


def find_singular_state(d: int, n: int = 0, spec: ProblemSpec | None = None,
                        c_tol: float | None = None) -> SingularResult:
    """Converge the n-node singular state and extract omega_inf.

    Brackets the manifold amplitude between c = 0 (forcing-perturbed pure
    singular solution, no crossing) and a doubling search from c = 1,
    bisects on the ft trichotomy to machine width, and reads omega_inf from
    the physical (h, h') mapped at the largest reliable radius.
    """
    if n < 0:
        raise ValueError("node count n must be nonnegative")
    if spec is None:
        spec = default_singular_spec(d)
    if spec.mode is not Mode.SINGULAR or spec.d != d:
        raise ValueError("spec must be singular-mode with matching d")

    c_lo = 0.0
    c_hi = _double_up(1.0, 0, spec)
    c_star = c_lo
    width = c_hi - c_lo
    for level in range(n + 1):
        if level > 0:
            c_lo = c_hi
            if classify_singular(c_lo, level, spec,
                                 with_floor=False).kind is ClassKind.CROSSES_ZERO:
                c_lo = c_star
            c_hi = _double_up(max(2.0 * c_lo, 1.0), level, spec)
        level_tol = default_c_tol(c_hi) if c_tol is None else c_tol
        c_star, c_lo, c_hi, width = _bisect_level(level, c_lo, c_hi, spec, level_tol)

    profile = _probe(c_star, n, spec)
    after = profile.nodes[n - 1] if n >= 1 else None
    before = profile.nodes[n] if len(profile.nodes) > n else None
    t_rel, i_tail = _tail_anchor_log(profile, spec.d, after=after, before=before)
    n_profile = sum(1 for tn in profile.nodes if tn <= t_rel)
    if n_profile != n:
        raise NodeCountError(
            f"singular profile has {n_profile} nodes before t={t_rel:g}, "
            f"expected {n}")
    ft = profile.f[i_tail] + 1.0
    if abs(ft) >= TAIL_GATE:
        raise ExtractionError(
            f"ft only reaches {abs(ft):.2e} at t={t_rel:g}; not decayed enough")
    omega_inf = _omega_from_log_sample(profile, i_tail, spec.d)
    return SingularResult(
        d=d,
        c_star=c_star,
        n=n,
        omega_inf=omega_inf,
        profile=profile,
        bracket_width=width,
        r_reliable=math.exp(t_rel),
        spec=spec,
    )


def _double_up(c_from: float, level: int, spec: ProblemSpec) -> float:
    c_hi = c_from
    for _ in range(_MAX_DOUBLINGS):
        if classify_singular(c_hi, level, spec, with_floor=False).kind \
                is ClassKind.CROSSES_ZERO:
            return c_hi
        c_hi *= 2.0
    raise BracketError(f"no singular crossing found doubling c up to {c_hi:g}")


def _bisect_level(level, c_lo, c_hi, spec, c_tol):
    while True:
        mid = 0.5 * (c_lo + c_hi)
        if not (c_lo < mid < c_hi):
            break
        kind = classify_singular(mid, level, spec, with_floor=False).kind
        if kind is ClassKind.CROSSES_ZERO:
            c_hi = mid
        elif kind is ClassKind.DECAYS:
            return mid, c_lo, c_hi, c_hi - c_lo
        else:
            c_lo = mid
    width = c_hi - c_lo
    if width > c_tol:
        raise BracketError(
            f"singular bisection stalled at width {width:g} > c_tol {c_tol:g}")
    return 0.5 * (c_lo + c_hi), c_lo, c_hi, width


def _tail_anchor_log(traj: Trajectory, d: int, after=None, before=None):
    """Index of the reliable tail sample of ft = 1 + eta in log variables."""
    if traj.termination is Termination.DECAYED_BELOW_FLOOR:
        return float(traj.r[-1]), len(traj.r) - 1
    t = traj.r
    ft = traj.f + 1.0
    ht = traj.h + 1.0
    decayed = np.exp(4.0 * t) > 2.0 * (d - 4.0) * ht  # r^2 > h physically
    if after is not None:
        decayed &= t > after
    if before is not None:
        decayed &= t < before
    if not decayed.any():
        raise ExtractionError("singular profile never entered the decayed regime")
    idx = np.flatnonzero(decayed)
    i_tail = idx[np.argmin(np.abs(ft[idx]))]
    return float(t[i_tail]), int(i_tail)


def _omega_from_log_sample(traj: Trajectory, i: int, d: int) -> float:
    # Map (xi, xi') at t to (h, h') at r = e^t, then apply the tail formula.
    t = float(traj.r[i])
    ht = float(traj.h[i]) + 1.0
    htp = float(traj.hp[i])
    a = 2.0 * (d - 4.0)
    r = math.exp(t)
    h = a * ht * math.exp(-2.0 * t)
    hp = a * math.exp(-3.0 * t) * (htp - 2.0 * ht)
    return h + r * hp / (d - 2.0)


def omega_drift(res: SingularResult) -> float:
    """Self-consistency of the far-field reading: |omega(R) - omega(R')|.

    R' is an earlier tail sample (ft still ~1e-5); a converged tail law makes
    the drift comparable to the integration tolerance.
    """
    traj = res.profile
    t = traj.r
    ft = np.abs(traj.f + 1.0)
    t_anchor = math.log(res.r_reliable)
    window = (t < t_anchor) & (ft > 1e-8) & (ft < 1e-5) \
        & (np.exp(4.0 * t) > 2.0 * (res.d - 4.0) * (traj.h + 1.0))
    if not window.any():
        return 0.0
    i_alt = int(np.flatnonzero(window)[0])
    i_anchor = int(np.argmin(np.abs(t - t_anchor)))
    return abs(_omega_from_log_sample(traj, i_anchor, res.d)
               - _omega_from_log_sample(traj, i_alt, res.d))


def singular_profile_to_physical(res: SingularResult, r):
    """Physical (f, h) at radius r from the converged log-variable profile.

    f = 2(d-4)(1 + eta)/r^2 and h = 2(d-4)(1 + xi)/r^2 by dense-output
    interpolation; r may be a scalar or an array within the profile range.
    """
    scalar = np.isscalar(r)
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r_arr <= 0.0):
        raise ValueError("radius must be positive")
    t = np.log(r_arr)
    t_lo, t_hi = res.profile.r[0], res.profile.r_end
    if np.any(t < t_lo) or np.any(t > t_hi):
        raise ValueError(
            f"radius outside profile range [{math.exp(t_lo):g}, {math.exp(t_hi):g}]")
    y = res.profile.dense(t)
    a = 2.0 * (res.d - 4.0)
    f = a * (1.0 + y[0]) / r_arr**2
    h = a * (1.0 + y[2]) / r_arr**2
    if scalar:
        return float(f[0]), float(h[0])
    return f, h


def fit_omega_inf_law(table) -> FitReport:
    """Least-squares fit of d - omega_inf = A exp(-gamma d).

    ``table`` is a sequence of (d, omega_inf) pairs; the fit is linear in
    ln(d - omega_inf).  Returns the fitted (A, gamma) and the maximum
    relative residual of d - omega_inf over the table.
    """
    ds = np.array([row[0] for row in table], dtype=float)
    oms = np.array([row[1] for row in table], dtype=float)
    gap = ds - oms
    if np.any(gap <= 0.0):
        raise FitDomainError("d - omega_inf must be positive for the log fit")
    if len(ds) < 3:
        raise FitDomainError("need at least 3 table rows to fit the law")
    slope, intercept = np.polyfit(ds, np.log(gap), 1)
    a_fit = float(np.exp(intercept))
    gamma = float(-slope)
    model = a_fit * np.exp(-gamma * ds)
    residual = float(np.max(np.abs(model - gap) / gap))
    return FitReport(
        model="OmegaInfLaw",
        params={"A": a_fit, "gamma": gamma},
        residual=residual,
        window=(float(ds.min()), float(ds.max())),
    )


# ---------------------------------------------------------------------------
# Large-amplitude autonomous limit: property-test harness only.

def autonomous_rhs(s: float, y: np.ndarray, d: int) -> np.ndarray:
    """Derivative of (ft, ft', ht, ht') for the c -> infinity limit system."""
    ft, ftp, ht, htp = y
    a = 2.0 * (d - 4.0)
    damp = d - 6.0
    return np.array([
        ftp,
        -damp * ftp - a * (ft * ht - ft),
        htp,
        -damp * htp - a * (ft * ft - ht),
    ])


def autonomous_energy(y: np.ndarray, d: int) -> np.ndarray:
    """Monotone energy of the autonomous system; -(d-4) at the fixed point."""
    ft, ftp, ht, htp = y
    a = d - 4.0
    return ftp**2 + 0.5 * htp**2 - 2.0 * a * ft**2 - a * ht**2 + 2.0 * a * ht * ft**2


def run_autonomous(d: int, s_end: float = 3.0, s_start: float = -8.0,
                   rtol: float = 1e-10, atol: float = 1e-12):
    """Integrate the autonomous limit from its unstable manifold (c = 1).

    Returns (s, y, E) arrays for property tests of the energy monotonicity.
    """
    lam = manifold_eigenvalues(d).lam
    amp = math.exp(lam * s_start)
    y0 = np.array([1.0 - amp, -lam * amp, 1.0 + 2.0 * amp, 2.0 * lam * amp])
    sol = solve_ivp(autonomous_rhs, (s_start, s_end), y0, args=(d,),
                    rtol=rtol, atol=atol, dense_output=False, max_step=0.05)
    energy = autonomous_energy(sol.y, d)
    return sol.t, sol.y, energy
