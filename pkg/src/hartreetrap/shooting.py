"""Bisection shooting for regular ground and excited states.

For a fixed central field value b > 0 the central shifted-potential value
c = h(0) is the shooting parameter.  Every trajectory either crosses zero,
diverges after a positive minimum (or negative maximum, or past the blow-up
threshold), or decays to zero; this trichotomy drives the bisection:

  * c = 0 never crosses zero, so it seeds the lower bracket endpoint;
  * large c crosses arbitrarily often (the rescaled problem oscillates like
    a Bessel function), so doubling from c = d finds the upper endpoint;
  * the n-node state sits at the infimum of parameters whose trajectory
    shows at least n+1 sign changes.

The frequency is recovered from the far field as omega = h(inf); with the
field numerically zero beyond a reliable radius R, h' is exactly a multiple
of r^(1-d) there and omega = h(R) + R h'(R)/(d-2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import (
    BracketError,
    ClassificationError,
    ExtractionError,
    NodeCountError,
)
from .ode import (
    EventSetup,
    Mode,
    ProblemSpec,
    Termination,
    Trajectory,
    integrate,
    series_start_regular,
)

# Decay floor relative to the central value b.
FLOOR_FACTOR = 1e-10
# Tail gate: omega extraction requires |f(R)| below this fraction of b.
TAIL_GATE = 1e-8
# Keep the start-series truncation below ~1e-16 relative: shrink r_start so
# that (scale * r_start^2)^3 stays tiny when b or c is large.
_SERIES_R_CAP = 2.2e-3
# Upper-bracket doubling gives up after this many steps.
_MAX_DOUBLINGS = 200


class ClassKind(Enum):
    CROSSES_ZERO = "CrossesZero"
    DIVERGES_POSITIVE = "DivergesPositive"
    DIVERGES_NEGATIVE = "DivergesNegative"
    DECAYS = "Decays"


@dataclass(frozen=True)
class Classification:
    """Outcome of one probe trajectory relative to a target node count."""

    kind: ClassKind
    r_event: float
    nodes_before: int


@dataclass(frozen=True)
class ShootResult:
    """A converged regular state."""

    b: float
    c_star: float
    n: int
    omega: float
    profile: Trajectory
    bracket_width: float
    r_reliable: float
    spec: ProblemSpec


def default_c_tol(c_scale: float) -> float:
    return 1e-13 * max(1.0, abs(c_scale))


def _start_spec(spec: ProblemSpec, b: float, c: float) -> ProblemSpec:
    scale = max(1.0, abs(b), abs(c))
    r_cap = _SERIES_R_CAP / math.sqrt(scale)
    if spec.r_start <= r_cap:
        return spec
    return replace(spec, r_start=r_cap)


def _events(b: float, n_target: int | None, with_floor: bool) -> EventSetup:
    node_stop = None if n_target is None else n_target + 1
    floor = FLOOR_FACTOR * b if with_floor else None
    return EventSetup(node_stop=node_stop, decay_floor=floor, f_scale=b)


def _probe(b: float, c: float, n_target: int, spec: ProblemSpec,
           with_floor: bool = True) -> Trajectory:
    spec_eff = _start_spec(spec, b, c)
    start = series_start_regular(b, c, spec_eff)
    return integrate(start, spec_eff, _events(b, n_target, with_floor))


def _classify_trajectory(traj: Trajectory) -> Classification:
    term = traj.termination
    if term is Termination.SIGN_CHANGE_F:
        return Classification(ClassKind.CROSSES_ZERO, traj.r_end, traj.node_count - 1)
    if term is Termination.POSITIVE_MINIMUM:
        return Classification(ClassKind.DIVERGES_POSITIVE, traj.r_end, traj.node_count)
    if term is Termination.NEGATIVE_MAXIMUM:
        return Classification(ClassKind.DIVERGES_NEGATIVE, traj.r_end, traj.node_count)
    if term is Termination.BLOW_UP:
        kind = ClassKind.DIVERGES_POSITIVE if traj.f[-1] > 0 \
            else ClassKind.DIVERGES_NEGATIVE
        return Classification(kind, traj.r_end, traj.node_count)
    if term is Termination.DECAYED_BELOW_FLOOR:
        return Classification(ClassKind.DECAYS, traj.r_end, traj.node_count)
    raise ClassificationError(
        f"trajectory reached r_max={traj.r_end:g} without a deciding event; "
        "increase r_max")


def classify(b: float, c: float, n_target: int, spec: ProblemSpec) -> Classification:
    """Classify the trajectory at shooting parameter c.

    Relative to the n_target-th sign change: CrossesZero if the
    (n_target+1)-th sign change occurs first, DivergesPositive/Negative if a
    forbidden extremum or blow-up occurs first, Decays if the decay floor is
    hit first.
    """
    if b <= 0.0:
        raise ValueError("classification requires b > 0")
    if spec.mode is not Mode.REGULAR:
        raise ValueError("classify operates on regular-mode specs")
    return _classify_trajectory(_probe(b, c, n_target, spec))


def _classify_probe(b, c, n_target, spec) -> ClassKind:
    # Bisection-internal variant: the decay floor is off so every probe
    # resolves to a crossing or a divergence, letting the bracket shrink to
    # machine width (the deepest dip for the final floored profile run).
    return _classify_trajectory(_probe(b, c, n_target, spec, with_floor=False)).kind


def _bisect(b: float, n: int, c_lo: float, c_hi: float, spec: ProblemSpec):
    """Shrink [c_lo, c_hi] around the n-node transition to machine width.

    The lower endpoint always classifies as diverging, the upper as crossing;
    the loop stops once the midpoint is no longer strictly inside, i.e. at
    ULP resolution, which leaves the deepest possible decayed tail for the
    final profile.  A midpoint that hits the decay floor is already converged.
    """
    while True:
        mid = 0.5 * (c_lo + c_hi)
        if not (c_lo < mid < c_hi):
            break
        kind = _classify_probe(b, mid, n, spec)
        if kind is ClassKind.CROSSES_ZERO:
            c_hi = mid
        elif kind is ClassKind.DECAYS:
            return mid, c_lo, c_hi, True
        else:
            c_lo = mid
    return 0.5 * (c_lo + c_hi), c_lo, c_hi, False


def _double_up(b: float, n: int, c_from: float, spec: ProblemSpec) -> float:
    c_hi = c_from
    for _ in range(_MAX_DOUBLINGS):
        if _classify_probe(b, c_hi, n, spec) is ClassKind.CROSSES_ZERO:
            return c_hi
        c_hi *= 2.0
    raise BracketError(
        f"no crossing found while doubling c up to {c_hi:g} (b={b:g}, n={n}); "
        "check d >= 6 and the tolerance settings")


def _solve_level(b, n, c_lo, c_hi, spec, c_tol):
    c_star, c_lo, c_hi, decayed = _bisect(b, n, c_lo, c_hi, spec)
    width = c_hi - c_lo
    if width > c_tol and not decayed:
        raise BracketError(
            f"bisection stalled at width {width:g} > c_tol {c_tol:g}")
    return c_star, c_lo, c_hi, width


def find_ground_state(b: float, spec: ProblemSpec,
                      c_tol: float | None = None) -> ShootResult:
    """Locate the positive monotone state for central value b.

    Brackets the transition between diverging (c = 0) and crossing
    trajectories, bisects on the classifier, and extracts omega from the
    decayed tail of the midpoint profile.
    """
    return find_excited_state(b, 0, spec, c_tol)


def find_excited_state(b: float, n: int, spec: ProblemSpec,
                       c_tol: float | None = None) -> ShootResult:
    """Locate the n-node state by climbing the bracket ladder level by level.

    The lower endpoint for level k is a parameter whose trajectory shows
    exactly k sign changes and then diverges (the converged upper endpoint
    of level k-1 qualifies); the upper endpoint shows at least k+1 changes.
    """
    if b <= 0.0:
        raise ValueError("find state requires b > 0")
    if n < 0:
        raise ValueError("node count n must be nonnegative")
    if spec.mode is not Mode.REGULAR:
        raise ValueError("regular-state search requires a regular-mode spec")

    c_lo = 0.0
    c_hi = _double_up(b, 0, float(spec.d), spec)
    c_star = c_lo
    width = c_hi - c_lo
    for level in range(n + 1):
        if level > 0:
            # Previous upper endpoint: crossed level times, then diverges.
            c_lo = c_hi
            if _classify_probe(b, c_lo, level, spec) is ClassKind.CROSSES_ZERO:
                # Levels closer than the previous bracket width; restart low.
                c_lo = c_star
            c_hi = _double_up(b, level, max(2.0 * c_lo, float(spec.d)), spec)
        if c_tol is None:
            level_tol = default_c_tol(c_hi)
        else:
            level_tol = c_tol
        c_star, c_lo, c_hi, width = _solve_level(b, level, c_lo, c_hi, spec, level_tol)

    profile = _probe(b, c_star, n, spec)
    # Nodes beyond the n-th are contaminant crossings at the far end of the
    # profile; the tail anchor must sit between the last real node and them.
    after = profile.nodes[n - 1] if n >= 1 else None
    before = profile.nodes[n] if len(profile.nodes) > n else None
    r_reliable, i_tail = _tail_anchor(profile, after=after, before=before)
    n_profile = sum(1 for rn in profile.nodes if rn <= r_reliable)
    if n_profile != n:
        raise NodeCountError(
            f"converged profile has {n_profile} nodes before r={r_reliable:g}, "
            f"expected {n}")
    omega = _tail_frequency_at(profile, i_tail, spec.d)
    return ShootResult(
        b=b,
        c_star=c_star,
        n=n,
        omega=omega,
        profile=profile,
        bracket_width=width,
        r_reliable=r_reliable,
        spec=spec,
    )


def tail_frequency(h: float, hp: float, r: float, d: int) -> float:
    """Far-field frequency h(inf) when h' = -K r^(1-d) beyond r."""
    return h + r * hp / (d - 2.0)


def _tail_anchor(traj: Trajectory, after: float | None = None,
                 before: float | None = None):
    """Reliable tail sample: the |f| minimum past the turning point.

    Beyond this sample the profile is contaminated by the growing mode (or
    was cut by the decay floor), so omega is read off exactly here.  The
    search window can be clipped to (after, before) to skip real nodes on
    the left and contaminant crossings on the right.
    """
    if traj.termination is Termination.DECAYED_BELOW_FLOOR:
        return float(traj.r[-1]), len(traj.r) - 1
    r = traj.r
    decayed = r * r - traj.h > 0.0
    if after is not None:
        decayed &= r > after
    if before is not None:
        decayed &= r < before
    if not decayed.any():
        raise ExtractionError("profile never entered the decayed regime")
    idx = np.flatnonzero(decayed)
    i_tail = idx[np.argmin(np.abs(traj.f[idx]))]
    return float(r[i_tail]), int(i_tail)


def omega_extract(traj: Trajectory, spec: ProblemSpec) -> float:
    """Frequency omega = h(inf) from a decayed regular profile.

    Applies the exact tail limit omega = h(R) + R h'(R)/(d-2) at the
    reliable radius R; requires |f(R)| below 1e-8 of the central scale.
    """
    f_scale = abs(traj.f[0])
    if f_scale == 0.0:
        # Trivial field: h is constant beyond quadrature noise.
        return tail_frequency(float(traj.h[-1]), float(traj.hp[-1]),
                              float(traj.r[-1]), spec.d)
    after = traj.nodes[-1] if traj.nodes else None
    r_rel, i_tail = _tail_anchor(traj, after=after)
    if abs(traj.f[i_tail]) >= TAIL_GATE * f_scale:
        raise ExtractionError(
            f"|f| only reaches {abs(traj.f[i_tail]) / f_scale:.2e} of the "
            f"central scale at r={r_rel:g}; profile not decayed enough")
    return _tail_frequency_at(traj, i_tail, spec.d)


def _tail_frequency_at(traj: Trajectory, i: int, d: int) -> float:
    return tail_frequency(float(traj.h[i]), float(traj.hp[i]), float(traj.r[i]), d)


@dataclass(frozen=True)
class UniquenessReport:
    """Grid scan of the classifier across the ground-state transition."""

    b: float
    transitions: int
    c_grid: tuple[float, ...]
    kinds: tuple[ClassKind, ...]


def uniqueness_probe(b: float, spec: ProblemSpec, c_tol: float | None = None,
                     grid_points: int = 33,
                     result: ShootResult | None = None) -> UniquenessReport:
    """Scan c over [0, 2 c_star] and count diverge-to-cross transitions.

    Exactly one transition is the numerical shadow of ground-state
    uniqueness; any other count is reported, not raised.
    """
    if result is None:
        result = find_ground_state(b, spec, c_tol)
    grid = np.linspace(0.0, 2.0 * result.c_star, grid_points)
    kinds = tuple(classify(b, float(c), 0, spec).kind for c in grid)
    transitions = 0
    for prev, cur in zip(kinds, kinds[1:]):
        crossed_prev = prev is ClassKind.CROSSES_ZERO
        crossed_cur = cur is ClassKind.CROSSES_ZERO
        if crossed_cur and not crossed_prev:
            transitions += 1
    return UniquenessReport(b=b, transitions=transitions,
                            c_grid=tuple(map(float, grid)), kinds=kinds)
