"""Radial ODE systems, series starts, and an event-detecting integrator.

Regular variables.  The stationary problem is solved as the coupled radial
system for the field f and the shifted potential h = omega - v (units with
unit trap frequency),

    f'' + (d-1)/r f' - r^2 f + f h = 0,
    h'' + (d-1)/r h' + f^2       = 0,

with the two-parameter family of local solutions near the origin

    f(r) = b + f2 r^2 + f4 r^4 + O(r^6),   f2 = -b c / (2d),
    h(r) = c + h2 r^2 + h4 r^4 + O(r^6),   h2 = -b^2 / (2d).

Singular variables.  Solutions diverging like 2(d-4)/r^2 at the origin are
integrated in log radius t = ln r for the deviations eta = ft - 1 and
xi = ht - 1, where f = 2(d-4) ft / r^2 and h = 2(d-4) ht / r^2:

    eta'' + (d-6) eta' + 2(d-4) xi          = e^{4t}(1+eta) - 2(d-4) eta xi,
    xi''  + (d-6) xi'  + 2(d-4)(2 eta - xi) = -2(d-4) eta^2.

The linearisation at the origin fixed point has a one-dimensional unstable
manifold with rate lam = lambda2_plus; trajectories on it behave like

    eta(t) = -c e^{lam t} + O(e^{4t}),   xi(t) = 2 c e^{lam t} + O(e^{4t}),

which fixes the normalisation of the manifold amplitude c (ft = 1 - c r^lam
to leading order).

The integrator is an adaptive embedded Runge-Kutta 4(5) advance (scipy's
RK45 stepper) with per-step dense output used to locate events: sign
changes of f, forbidden extrema (positive local minimum / negative local
maximum, which imply divergence), blow-up past a threshold, decay below a
floor in the linear regime, and reaching r_max.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.integrate import RK45, OdeSolution
from scipy.optimize import brentq

from .errors import InitializationError, InvalidStateError, StiffnessError

# Index of f (or ft-1) and its derivative in the state vector (f, f', h, h').
_IF, _IFP, _IH, _IHP = 0, 1, 2, 3

# Probe points per accepted step used to bracket events before root-polishing.
_PROBES_PER_STEP = 5

# Hard cap on accepted steps; far beyond anything a healthy run needs.
_MAX_STEPS = 200_000


class Mode(Enum):
    REGULAR = "regular"
    SINGULAR = "singular"


class Termination(Enum):
    SIGN_CHANGE_F = "SignChangeF"
    POSITIVE_MINIMUM = "PositiveMinimum"
    NEGATIVE_MAXIMUM = "NegativeMaximum"
    BLOW_UP = "BlowUp"
    REACHED_R_MAX = "ReachedRMax"
    DECAYED_BELOW_FLOOR = "DecayedBelowFloor"


@dataclass(frozen=True)
class ProblemSpec:
    """Immutable problem definition: dimension, variable set, and tolerances.

    In singular mode the independent variable is t = ln r, so ``r_start``
    enters through t0 = ln(r_start).
    """

    d: int
    mode: Mode = Mode.REGULAR
    rtol: float = 1e-10
    atol: float = 1e-12
    r_start: float = 1e-3
    f_blowup: float | None = None  # None: resolved per run as max(1e6, 1e6*b)
    r_max: float = 50.0

    def __post_init__(self):
        if self.mode is Mode.REGULAR and self.d < 6:
            raise ValueError(f"regular mode requires d >= 6, got d={self.d}")
        if self.mode is Mode.SINGULAR and self.d < 7:
            raise ValueError(f"singular mode requires d >= 7, got d={self.d}")
        if not 0.0 < self.r_start < 1.0:
            raise ValueError("r_start must lie in (0, 1)")
        if self.rtol <= 0.0 or self.atol <= 0.0:
            raise ValueError("rtol and atol must be positive")
        if self.f_blowup is not None and self.f_blowup <= 0.0:
            raise ValueError("f_blowup must be positive")
        if self.r_max <= 1.0:
            raise ValueError("r_max must exceed 1")


@dataclass(frozen=True)
class State:
    """One point of a trajectory.

    Regular mode: (r, f, f', h, h').  Singular mode the same slots carry
    (t, eta, eta', xi, xi') with t = ln r.
    """

    r: float
    f: float
    fp: float
    h: float
    hp: float

    def as_array(self) -> np.ndarray:
        return np.array([self.f, self.fp, self.h, self.hp])

    def is_finite(self) -> bool:
        return all(map(math.isfinite, (self.r, self.f, self.fp, self.h, self.hp)))


@dataclass(frozen=True)
class Eigenvalues:
    """Linearisation rates of the singular-origin fixed point."""

    lambda1_plus: complex
    lambda1_minus: complex
    lambda2_plus: float
    lambda2_minus: float
    lam: float  # dominant unstable rate, = lambda2_plus, in [3, 4) for d >= 7
    alpha1: float
    alpha2: float
    beta: float
    oscillatory_lambda1: bool  # True iff d < 10 + 4*sqrt(2)


@dataclass(frozen=True)
class EventSetup:
    """Which events terminate an integration and at what thresholds.

    node_stop: terminate at the k-th sign change of f (None: never).
    decay_floor: absolute |f| floor for the decayed-regime stop (None: off).
    f_scale: typical field magnitude (b for regular runs, 1 in log
        variables); sets the default blow-up threshold max(1e6, 1e6*f_scale).
    stride: retain every stride-th accepted step in the sample arrays.
    """

    node_stop: int | None = 1
    decay_floor: float | None = None
    f_scale: float = 1.0
    stride: int = 1


@dataclass(frozen=True)
class Trajectory:
    """Dense samples of one integration run plus its termination record.

    ``r``/``y`` hold the retained accepted-step states (y columns are f, f',
    h, h', or their log-variable counterparts); ``dense`` is a continuous
    interpolant on [r[0], r_end]; ``nodes`` are the refined radii of the
    recorded sign changes of f.
    """

    r: np.ndarray
    y: np.ndarray
    termination: Termination
    r_end: float
    node_count: int
    nodes: tuple[float, ...]
    mode: Mode
    dense: OdeSolution | None = field(repr=False, default=None)

    @property
    def f(self) -> np.ndarray:
        return self.y[:, _IF]

    @property
    def fp(self) -> np.ndarray:
        return self.y[:, _IFP]

    @property
    def h(self) -> np.ndarray:
        return self.y[:, _IH]

    @property
    def hp(self) -> np.ndarray:
        return self.y[:, _IHP]

    @property
    def samples(self) -> tuple[State, ...]:
        return tuple(State(float(x), *map(float, row)) for x, row in zip(self.r, self.y))


def rhs_regular(s: State, d: int) -> np.ndarray:
    """Derivative of (f, f', h, h') at a regular-mode state.

    Returns (f', r^2 f - f h - (d-1) f'/r, h', -f^2 - (d-1) h'/r).
    """
    if not s.is_finite():
        raise InvalidStateError(f"non-finite state at r={s.r}")
    return _rhs_regular_arr(s.r, s.as_array(), d)


def _rhs_regular_arr(r, y, d):
    f, fp, h, hp = y
    k = (d - 1.0) / r
    return np.array([fp, r * r * f - f * h - k * fp, hp, -f * f - k * hp])


def rhs_singular(s: State, d: int) -> np.ndarray:
    """Derivative of (eta, eta', xi, xi') at t = s.r, forcing term included."""
    if not s.is_finite():
        raise InvalidStateError(f"non-finite state at t={s.r}")
    return _rhs_singular_arr(s.r, s.as_array(), d)


def _rhs_singular_arr(t, y, d):
    eta, etap, xi, xip = y
    a = 2.0 * (d - 4.0)
    damp = d - 6.0
    eta2 = math.exp(4.0 * t) * (1.0 + eta) - a * eta * xi - damp * etap - a * xi
    xi2 = -a * eta * eta - damp * xip - a * (2.0 * eta - xi)
    return np.array([etap, eta2, xip, xi2])


def series_coefficients_regular(b: float, c: float, d: int):
    """Quadratic and quartic series coefficients (f2, f4, h2, h4) at r = 0."""
    f2 = -b * c / (2.0 * d)
    h2 = -b * b / (2.0 * d)
    f4 = (b - b * h2 - c * f2) / (4.0 * (d + 2.0))
    h4 = -b * f2 / (2.0 * (d + 2.0))
    return f2, f4, h2, h4


def series_start_regular(b: float, c: float, spec: ProblemSpec) -> State:
    """State at r = spec.r_start from the near-origin power series.

    The quadratic coefficients are f2 = -bc/(2d) and h2 = -b^2/(2d); the
    quartic correction is kept so the truncation error stays below atol for
    field scales up to ~1e3 at the default r_start.
    """
    if b < 0.0:
        raise ValueError("central field value b must be nonnegative")
    if spec.mode is not Mode.REGULAR:
        raise ValueError("series_start_regular requires a regular-mode spec")
    r = spec.r_start
    f2, f4, h2, h4 = series_coefficients_regular(b, c, spec.d)
    r2 = r * r
    return State(
        r=r,
        f=b + (f2 + f4 * r2) * r2,
        fp=(2.0 * f2 + 4.0 * f4 * r2) * r,
        h=c + (h2 + h4 * r2) * r2,
        hp=(2.0 * h2 + 4.0 * h4 * r2) * r,
    )


def manifold_eigenvalues(d: int) -> Eigenvalues:
    """Eigenvalues of the origin linearisation in log-radius variables.

    lambda_{1,2}^{+-} = (-d + 6 +- sqrt(disc)) / 2 with disc = d^2 - 20d + 68
    for the first pair (complex below d = 10 + 4 sqrt(2) ~ 15.66) and
    disc = d^2 + 4d - 28 for the second.  The dominant unstable rate
    lam = lambda2_plus satisfies 3 <= lam < 4 for all d >= 7.
    """
    if d < 7:
        raise ValueError(f"eigenvalue analysis requires d >= 7, got d={d}")
    disc1 = d * d - 20.0 * d + 68.0
    disc2 = d * d + 4.0 * d - 28.0
    alpha1 = 0.5 * math.sqrt(abs(disc1))
    alpha2 = 0.5 * math.sqrt(disc2)
    beta = -0.5 * d + 3.0
    oscillatory = disc1 < 0.0
    if oscillatory:
        l1p = complex(beta, alpha1)
        l1m = complex(beta, -alpha1)
    else:
        l1p = complex(beta + alpha1, 0.0)
        l1m = complex(beta - alpha1, 0.0)
    return Eigenvalues(
        lambda1_plus=l1p,
        lambda1_minus=l1m,
        lambda2_plus=beta + alpha2,
        lambda2_minus=beta - alpha2,
        lam=beta + alpha2,
        alpha1=alpha1,
        alpha2=alpha2,
        beta=beta,
        oscillatory_lambda1=oscillatory,
    )


# Manifold-start validity: the discarded O(e^{4t}) term must stay subdominant.
MANIFOLD_AMPLITUDE_CAP = 1e-6
MANIFOLD_FORCING_CAP = 1e-8


def manifold_start_singular(c: float, spec: ProblemSpec) -> State:
    """State on the unstable manifold at t0 = ln(spec.r_start).

    Requires |c| e^{lam t0} <= 1e-6 and e^{4 t0} <= 1e-8 so the neglected
    O(e^{4t}) terms are subdominant; otherwise asks for a smaller r_start.
    """
    if spec.mode is not Mode.SINGULAR:
        raise ValueError("manifold_start_singular requires a singular-mode spec")
    lam = manifold_eigenvalues(spec.d).lam
    t0 = math.log(spec.r_start)
    amp = math.exp(lam * t0)
    if abs(c) * amp > MANIFOLD_AMPLITUDE_CAP or math.exp(4.0 * t0) > MANIFOLD_FORCING_CAP:
        raise InitializationError(
            f"r_start={spec.r_start:g} too large for amplitude c={c:g}: "
            f"shrink r_start until |c| r_start^lam <= {MANIFOLD_AMPLITUDE_CAP:g} "
            f"and r_start^4 <= {MANIFOLD_FORCING_CAP:g}"
        )
    return State(r=t0, f=-c * amp, fp=-c * lam * amp, h=2.0 * c * amp, hp=2.0 * c * lam * amp)


def _f_offset(mode: Mode) -> float:
    # Events watch the physical-sign field: f itself, or ft = 1 + eta.
    return 1.0 if mode is Mode.SINGULAR else 0.0


def _in_decay_regime(mode: Mode, d: int, x: float, y: np.ndarray) -> bool:
    # Regular: past the turning point r^2 > h.  Singular equivalent:
    # r^4 > 2(d-4) ht, i.e. e^{4t} > 2(d-4)(1+xi).
    if mode is Mode.REGULAR:
        return x * x - y[_IH] > 0.0
    return math.exp(4.0 * x) > 2.0 * (d - 4.0) * (1.0 + y[_IH])


# Event priority used only to break exact location ties within a step.
_PRIORITY = {
    Termination.SIGN_CHANGE_F: 0,
    Termination.POSITIVE_MINIMUM: 1,
    Termination.NEGATIVE_MAXIMUM: 1,
    Termination.BLOW_UP: 2,
    Termination.DECAYED_BELOW_FLOOR: 3,
}


def integrate(start: State, spec: ProblemSpec, events: EventSetup = EventSetup(),
              *, max_step: float = np.inf) -> Trajectory:
    """Advance from ``start`` until the first terminating event.

    Accepted steps are scanned with the step's dense output; event locations
    are polished by root bracketing.  A sign change and an extremum falling
    in the same step are resolved by their located positions (spec order
    SignChangeF > extremum > BlowUp breaks exact ties).
    """
    if not start.is_finite():
        raise InvalidStateError("non-finite start state")
    mode, d = spec.mode, spec.d
    off = _f_offset(mode)
    fun = (lambda x, y: _rhs_regular_arr(x, y, d)) if mode is Mode.REGULAR \
        else (lambda x, y: _rhs_singular_arr(x, y, d))
    x_bound = spec.r_max if mode is Mode.REGULAR else math.log(spec.r_max)
    blowup = spec.f_blowup if spec.f_blowup is not None \
        else max(1e6, 1e6 * abs(events.f_scale))
    floor = events.decay_floor

    rk = RK45(fun, start.r, start.as_array(), t_bound=x_bound,
              rtol=spec.rtol, atol=spec.atol, max_step=max_step)

    xs = [start.r]
    ys = [start.as_array()]
    segments = []
    seg_ends = [start.r]
    nodes: list[float] = []
    termination = None
    n_steps = 0

    while rk.status == "running":
        try:
            rk.step()
        except Exception as exc:  # scipy signals failure via message/raise
            raise StiffnessError(str(exc), last_state=_mk_state(xs[-1], ys[-1])) from exc
        if rk.status == "failed":
            raise StiffnessError("step size underflow",
                                 last_state=_mk_state(xs[-1], ys[-1]))
        n_steps += 1
        if n_steps > _MAX_STEPS:
            raise StiffnessError("step budget exhausted",
                                 last_state=_mk_state(xs[-1], ys[-1]))
        if not np.all(np.isfinite(rk.y)):
            raise StiffnessError("non-finite state reached",
                                 last_state=_mk_state(xs[-1], ys[-1]))
        seg = rk.dense_output()
        hit = _scan_step(seg, seg.t_min, seg.t_max, off, blowup, floor, mode, d,
                         nodes, events.node_stop)
        if hit is not None:
            termination, x_end = hit
            if x_end > seg_ends[-1]:
                segments.append(seg)
                seg_ends.append(x_end)
                xs.append(x_end)
                ys.append(seg(x_end))
            break
        segments.append(seg)
        seg_ends.append(rk.t)
        xs.append(rk.t)
        ys.append(rk.y.copy())

    if termination is None:
        termination = Termination.REACHED_R_MAX

    idx = np.arange(len(xs))
    if events.stride > 1 and len(xs) > 2:
        keep = np.zeros(len(xs), dtype=bool)
        keep[::events.stride] = True
        keep[0] = keep[-1] = True
        idx = idx[keep]

    dense = OdeSolution(np.asarray(seg_ends), segments) if segments else None
    return Trajectory(
        r=np.asarray(xs)[idx],
        y=np.asarray(ys)[idx],
        termination=termination,
        r_end=float(xs[-1]),
        node_count=len(nodes),
        nodes=tuple(nodes),
        mode=mode,
        dense=dense,
    )


def _mk_state(x, y):
    return State(float(x), *map(float, y))


def _scan_step(seg, x0, x1, off, blowup, floor, mode, d, nodes, node_stop):
    """Scan one accepted step; record nodes and return (termination, x) or None."""
    px = np.linspace(x0, x1, _PROBES_PER_STEP)
    py = seg(px)
    pf = py[_IF] + off
    pfp = py[_IFP]

    candidates = []  # (x_loc, priority, termination)

    # Sign changes of f: every bracketing probe interval, earliest first.
    for i in range(_PROBES_PER_STEP - 1):
        if pf[i] * pf[i + 1] < 0.0:
            xz = brentq(lambda x: seg(x)[_IF] + off, px[i], px[i + 1],
                        xtol=1e-14)
            candidates.append((xz, _PRIORITY[Termination.SIGN_CHANGE_F],
                               Termination.SIGN_CHANGE_F))

    # Extrema of the watched field: f' crossings, kind decided at the root.
    for i in range(_PROBES_PER_STEP - 1):
        if pfp[i] * pfp[i + 1] < 0.0:
            xe = brentq(lambda x: seg(x)[_IFP], px[i], px[i + 1],
                        xtol=1e-14)
            fe = seg(xe)[_IF] + off
            upward = pfp[i] < 0.0
            if upward and fe > 0.0:
                candidates.append((xe, _PRIORITY[Termination.POSITIVE_MINIMUM],
                                   Termination.POSITIVE_MINIMUM))
            elif not upward and fe < 0.0:
                candidates.append((xe, _PRIORITY[Termination.NEGATIVE_MAXIMUM],
                                   Termination.NEGATIVE_MAXIMUM))

    # Blow-up threshold crossing.
    over = np.abs(pf) >= blowup
    if over.any():
        j = int(np.argmax(over))
        if j == 0:
            candidates.append((px[0], _PRIORITY[Termination.BLOW_UP],
                               Termination.BLOW_UP))
        else:
            xb = brentq(lambda x: abs(seg(x)[_IF] + off) - blowup,
                        px[j - 1], px[j], xtol=1e-14)
            candidates.append((xb, _PRIORITY[Termination.BLOW_UP],
                               Termination.BLOW_UP))

    # Decay floor: |f| below floor while shrinking past the turning point.
    if floor is not None:
        for i in range(_PROBES_PER_STEP):
            if abs(pf[i]) < floor and pf[i] * pfp[i] < 0.0 \
                    and _in_decay_regime(mode, d, px[i], py[:, i]):
                xf = px[i]
                if i > 0 and abs(pf[i - 1]) >= floor:
                    xf = brentq(lambda x: abs(seg(x)[_IF] + off) - floor,
                                px[i - 1], px[i], xtol=1e-14)
                candidates.append((xf, _PRIORITY[Termination.DECAYED_BELOW_FLOOR],
                                   Termination.DECAYED_BELOW_FLOOR))
                break

    if not candidates:
        return None
    candidates.sort(key=lambda ev: (ev[0], ev[1]))
    for x_loc, _, term in candidates:
        if term is Termination.SIGN_CHANGE_F:
            nodes.append(x_loc)
            if node_stop is not None and len(nodes) >= node_stop:
                return term, x_loc
        else:
            return term, x_loc
    return None
