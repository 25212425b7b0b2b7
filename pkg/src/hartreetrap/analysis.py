"""Verification and post-processing of converged states.

All checks reduce to weighted radial integrals over a profile.  With
v = omega - h and the norms

    A = int f'^2 r^(d-1),   B = int r^2 f^2 r^(d-1),   C = int f^2 r^(d-1),
    D = int v'^2 r^(d-1),   V = int f^2 v r^(d-1),     W = int f^2 v' r^d,

exact decaying solutions satisfy

    eq18:  A + B + V = omega C
    eq19:  (d-2) A + (d+2) B + W + d V = d omega C
    eq20:  D + V = 0
    eq21:  (d-2)/2 D - W = 0
    main Pohozaev:        (d-6) A + (d+2) B = (d-2) omega C
    alternative Pohozaev: 8 B - (d-6) V = 4 omega C

and the ground-state frequency obeys d (d-6)/(d-2) <= omega < d.

Quadrature is composite Gauss-Legendre on the profile's accepted-step mesh
(dense output evaluated at the panel nodes); the field is below floor
beyond the reliable radius, so f-weighted tails vanish there while the
v'^2 tail (v' proportional to r^(1-d)) is added in closed form.

The Newton cross-check rebuilds the potential from the field alone,

    v_N(r) = -1/(d-2) int_0^inf f(s)^2 s^(d-1) / max(r, s)^(d-2) ds,

and compares it with omega - h, tying the local formulation back to the
nonlocal one.  Mass and energy are

    M = S_d C,   E = S_d (A/2 + B/2 + V/4),   S_d = 2 pi^(d/2) / Gamma(d/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import ExtractionError, FitDomainError, ModelNotApplicableError
from .ode import Mode, ProblemSpec
from .shooting import ShootResult, _bisect, classify, ClassKind, find_ground_state
from . import shooting as _shooting

DEFAULT_NODES_PER_PANEL = 8
IDENTITY_TOL = 1e-6


@dataclass(frozen=True)
class IdentityReport:
    """Relative residuals of the six integral identities plus the norms."""

    residuals: dict[str, float]
    norms: dict[str, float]

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values())


@dataclass(frozen=True)
class FitReport:
    """Parameters and residual of an asymptotic fit over a stated window."""

    model: str
    params: dict[str, float]
    residual: float
    window: tuple[float, float]


@dataclass(frozen=True)
class SweepRecord:
    """One row of an omega(b) curve."""

    b: float
    omega: float
    c_star: float
    n: int
    bracket_width: float
    identity_max_residual: float
    error: str | None = None


@dataclass(frozen=True)
class RangeCheck:
    """Margins of a ground-state frequency against its allowed range."""

    d: int
    omega: float
    lower: float
    upper: float
    margin_lower: float
    margin_upper: float
    passed: bool


class _QuadProfile:
    """Panelised profile with a vector evaluator for (f, f', h, h')."""

    def __init__(self, panels: np.ndarray, evaluate):
        if len(panels) < 2:
            raise ExtractionError("profile too short for quadrature")
        self.panels = panels
        self.evaluate = evaluate

    @classmethod
    def from_result(cls, res: ShootResult) -> "_QuadProfile":
        traj = res.profile
        mask = traj.r <= res.r_reliable
        panels = np.append(traj.r[mask], res.r_reliable) \
            if traj.r[mask][-1] < res.r_reliable else traj.r[mask]
        return cls(panels, lambda x: np.asarray(traj.dense(x)))

    @classmethod
    def from_samples(cls, r, f, fp, h, hp, r_hi=None) -> "_QuadProfile":
        r = np.asarray(r, dtype=float)
        sf = CubicHermiteSpline(r, np.asarray(f, dtype=float),
                                np.asarray(fp, dtype=float))
        sh = CubicHermiteSpline(r, np.asarray(h, dtype=float),
                                np.asarray(hp, dtype=float))
        sfd, shd = sf.derivative(), sh.derivative()

        def evaluate(x):
            return np.vstack([sf(x), sfd(x), sh(x), shd(x)])

        panels = r if r_hi is None else np.append(r[r < r_hi], r_hi)
        return cls(panels, evaluate)

    def nodes(self, nodes_per_panel: int):
        xg, wg = np.polynomial.legendre.leggauss(nodes_per_panel)
        lo, hi = self.panels[:-1], self.panels[1:]
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        x = (mid[:, None] + half[:, None] * xg[None, :]).ravel()
        w = (half[:, None] * wg[None, :]).ravel()
        return x, w


def _norms(profile: _QuadProfile, omega: float, d: int,
           nodes_per_panel: int) -> dict[str, float]:
    x, w = profile.nodes(nodes_per_panel)
    f, fp, h, hp = profile.evaluate(x)
    v = omega - h
    vp = -hp
    rd1 = x ** (d - 1)
    f2 = f * f

    norms = {
        "fp_sq": float(np.dot(w, fp * fp * rd1)),
        "rf_sq": float(np.dot(w, f2 * x * x * rd1)),
        "f_sq": float(np.dot(w, f2 * rd1)),
        "vp_sq": float(np.dot(w, vp * vp * rd1)),
        "f2v": float(np.dot(w, f2 * v * rd1)),
        "f2vp_r": float(np.dot(w, f2 * vp * x * rd1)),
    }

    # Head [0, r_start): the field is the constant series head there; only
    # the f^2-weighted moments matter and even they are ~r0^d.
    r0 = profile.panels[0]
    f0, _, h0, _ = (float(z) for z in profile.evaluate(np.array([r0]))[:, 0])
    norms["f_sq"] += f0 * f0 * r0**d / d
    norms["rf_sq"] += f0 * f0 * r0 ** (d + 2) / (d + 2)
    norms["f2v"] += f0 * f0 * (omega - h0) * r0**d / d

    # Tail (R, inf): f is below floor, but v' = K r^(1-d) contributes exactly.
    rr = profile.panels[-1]
    vpr = float(-profile.evaluate(np.array([rr]))[3, 0])
    norms["vp_sq"] += vpr * vpr * rr**d / (d - 2)
    return norms


def _residual(terms: list[float]) -> float:
    den = max(abs(t) for t in terms)
    if den == 0.0:
        return 0.0
    return abs(sum(terms)) / den


def _identity_residuals(norms: dict[str, float], omega: float, d: int):
    a, b, c = norms["fp_sq"], norms["rf_sq"], norms["f_sq"]
    dd, v, w = norms["vp_sq"], norms["f2v"], norms["f2vp_r"]
    return {
        "eq18": _residual([a, b, v, -omega * c]),
        "eq19": _residual([(d - 2) * a, (d + 2) * b, w, d * v, -d * omega * c]),
        "eq20": _residual([dd, v]),
        "eq21": _residual([0.5 * (d - 2) * dd, -w]),
        "poh_main": _residual([(d - 6) * a, (d + 2) * b, -(d - 2) * omega * c]),
        "poh_alt": _residual([8.0 * b, -(d - 6) * v, -4.0 * omega * c]),
    }


def pohozaev_report(res: ShootResult,
                    nodes_per_panel: int = DEFAULT_NODES_PER_PANEL) -> IdentityReport:
    """All six integral identities evaluated on a converged profile."""
    profile = _QuadProfile.from_result(res)
    norms = _norms(profile, res.omega, res.spec.d, nodes_per_panel)
    return IdentityReport(
        residuals=_identity_residuals(norms, res.omega, res.spec.d),
        norms=norms,
    )


def identity_report_from_samples(r, f, fp, h, hp, omega: float, d: int,
                                 r_reliable: float,
                                 nodes_per_panel: int = DEFAULT_NODES_PER_PANEL,
                                 ) -> IdentityReport:
    """Identity report recomputed from stored (possibly downsampled) samples."""
    profile = _QuadProfile.from_samples(r, f, fp, h, hp, r_hi=r_reliable)
    norms = _norms(profile, omega, d, nodes_per_panel)
    return IdentityReport(
        residuals=_identity_residuals(norms, omega, d),
        norms=norms,
    )


def newton_check_from_samples(r, f, fp, h, hp, omega: float, d: int,
                              r_reliable: float, n_grid: int = 50,
                              nodes_per_panel: int = DEFAULT_NODES_PER_PANEL) -> float:
    """Newton cross-check recomputed from stored samples."""
    profile = _QuadProfile.from_samples(r, f, fp, h, hp, r_hi=r_reliable)
    return _newton_deviation(profile, omega, d, n_grid, nodes_per_panel)


def _newton_deviation(profile: _QuadProfile, omega: float, d: int,
                      n_grid: int, nodes_per_panel: int) -> float:
    mass_in, outer, head_outer = _cumulative_moments(profile, d, nodes_per_panel)
    v_n0 = -(outer[0] + head_outer) / (d - 2)
    if v_n0 == 0.0:
        return 0.0
    edges = profile.panels
    pick = np.unique(np.linspace(0, len(edges) - 1, n_grid).astype(int))
    rg = edges[pick]
    v_n = -(mass_in[pick] / rg ** (d - 2) + outer[pick]) / (d - 2)
    h_g = profile.evaluate(rg)[2]
    return float(np.max(np.abs(v_n - (omega - h_g))) / abs(v_n0))


def _cumulative_moments(profile: _QuadProfile, d: int, nodes_per_panel: int):
    """Per-panel-edge cumulants of f^2 s^(d-1) (mass) and f^2 s (outer kernel)."""
    x, w = profile.nodes(nodes_per_panel)
    f = profile.evaluate(x)[0]
    f2 = f * f
    n_panels = len(profile.panels) - 1
    wm = (w * f2 * x ** (d - 1)).reshape(n_panels, nodes_per_panel).sum(axis=1)
    wt = (w * f2 * x).reshape(n_panels, nodes_per_panel).sum(axis=1)
    r0 = profile.panels[0]
    f0 = float(profile.evaluate(np.array([r0]))[0, 0])
    mass_in = np.concatenate([[0.0], np.cumsum(wm)]) + f0 * f0 * r0**d / d
    outer = np.concatenate([[0.0], np.cumsum(wt)])
    outer = outer[-1] - outer  # int_r^R at each edge (r >= r0)
    head_outer = f0 * f0 * r0 * r0 / 2.0  # int_0^{r0} f^2 s ds, part of T(0)
    return mass_in, outer, head_outer


def newton_potential_check(res: ShootResult, n_grid: int = 50,
                           nodes_per_panel: int = DEFAULT_NODES_PER_PANEL) -> float:
    """Max relative deviation between v_N from the field and omega - h.

    Both sides solve the same radial Poisson problem with decaying data, so
    the deviation is an end-to-end consistency measure of the run.
    Returned relative to |v_N(0)|.
    """
    profile = _QuadProfile.from_result(res)
    return _newton_deviation(profile, res.omega, res.spec.d, n_grid,
                             nodes_per_panel)


def newton_potential(res: ShootResult, r,
                     nodes_per_panel: int = DEFAULT_NODES_PER_PANEL):
    """v_N at radii beyond the profile (closed form -M_tot / ((d-2) r^(d-2)))."""
    d = res.spec.d
    profile = _QuadProfile.from_result(res)
    mass_in, _, _ = _cumulative_moments(profile, d, nodes_per_panel)
    r = np.asarray(r, dtype=float)
    if np.any(r < profile.panels[-1]):
        raise ValueError("use newton_potential_check inside the profile range")
    return -mass_in[-1] / ((d - 2) * r ** (d - 2))


def mass_energy(res: ShootResult,
                nodes_per_panel: int = DEFAULT_NODES_PER_PANEL) -> tuple[float, float]:
    """Conserved mass and energy of the state."""
    d = res.spec.d
    profile = _QuadProfile.from_result(res)
    norms = _norms(profile, res.omega, d, nodes_per_panel)
    s_d = 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)
    mass = s_d * norms["f_sq"]
    energy = s_d * (0.5 * norms["fp_sq"] + 0.5 * norms["rf_sq"]
                    + 0.25 * norms["f2v"])
    return mass, energy


def omega_lower_bound(d: int) -> float:
    return d * (d - 6.0) / (d - 2.0)


def omega_range_check(res: ShootResult, eps: float = 1e-6) -> RangeCheck:
    """Ground-state frequency against d(d-6)/(d-2) <= omega < d."""
    d = res.spec.d
    lower = omega_lower_bound(d)
    passed = (res.omega >= lower - eps) and (res.omega < d)
    return RangeCheck(
        d=d,
        omega=res.omega,
        lower=lower,
        upper=float(d),
        margin_lower=res.omega - lower,
        margin_upper=d - res.omega,
        passed=bool(passed),
    )


# ---------------------------------------------------------------------------
# Frequency-curve sweeps.

def _sweep_one(spec: ProblemSpec, b: float,
               c_tol: float | None, with_identities: bool,
               warm: tuple[float, float] | None = None) -> SweepRecord:
    try:
        res = None
        if warm is not None:
            res = _warm_ground_state(b, spec, warm)
        if res is None:
            res = find_ground_state(b, spec, c_tol)
        ident = float("nan")
        if with_identities:
            ident = pohozaev_report(res).max_residual
        return SweepRecord(b=b, omega=res.omega, c_star=res.c_star, n=res.n,
                          bracket_width=res.bracket_width,
                          identity_max_residual=ident)
    except Exception as exc:
        return SweepRecord(b=b, omega=float("nan"), c_star=float("nan"), n=0,
                          bracket_width=float("nan"),
                          identity_max_residual=float("nan"),
                          error=f"{type(exc).__name__}: {exc}")


def _warm_ground_state(b: float, spec: ProblemSpec,
                       warm: tuple[float, float]) -> ShootResult | None:
    """Try the neighbour's bracket c_star +- 10*width; None on mismatch."""
    c_prev, width_prev = warm
    pad = 10.0 * max(width_prev, abs(c_prev) * 1e-15)
    c_lo, c_hi = c_prev - pad, c_prev + pad
    if c_lo < 0.0:
        return None
    if classify(b, c_lo, 0, spec).kind is ClassKind.CROSSES_ZERO:
        return None
    if classify(b, c_hi, 0, spec).kind is not ClassKind.CROSSES_ZERO:
        return None
    c_star, c_lo, c_hi, _ = _bisect(b, 0, c_lo, c_hi, spec)
    profile = _shooting._probe(b, c_star, 0, spec)
    before = profile.nodes[0] if profile.nodes else None
    r_rel, i_tail = _shooting._tail_anchor(profile, before=before)
    omega = _shooting._tail_frequency_at(profile, i_tail, spec.d)
    return ShootResult(b=b, c_star=c_star, n=0, omega=omega, profile=profile,
                       bracket_width=c_hi - c_lo, r_reliable=r_rel, spec=spec)


def sweep_omega_b(d: int, b_grid, spec: ProblemSpec | None = None,
                  c_tol: float | None = None, jobs: int = 1,
                  with_identities: bool = True) -> list[SweepRecord]:
    """Ground-state solve per grid value of b, sorted by b.

    Sequential sweeps warm-start each bracket from the previous point
    (falling back to a cold start on classification mismatch); parallel
    sweeps cold-start every point so results are independent of scheduling.
    Per-point failures are recorded in-row and the sweep continues.
    """
    if spec is None:
        spec = ProblemSpec(d=d)
    if spec.d != d or spec.mode is not Mode.REGULAR:
        raise ValueError("sweep spec must be regular-mode with matching d")
    bs = sorted(float(b) for b in b_grid)
    if any(b <= 0.0 for b in bs):
        raise ValueError("b grid must be positive")

    if jobs > 1:
        import multiprocessing as mp

        args = [(spec, b, c_tol, with_identities) for b in bs]
        with mp.Pool(processes=jobs) as pool:
            records = pool.starmap(_sweep_one, args)
        return sorted(records, key=lambda rec: rec.b)

    records = []
    warm = None
    for b in bs:
        rec = _sweep_one(spec, b, c_tol, with_identities, warm=warm)
        records.append(rec)
        if rec.error is None:
            warm = (rec.c_star, rec.bracket_width)
    return records


def find_curve_extrema(records: list[SweepRecord],
                       significance: float = 1e-6):
    """Interior local extrema of omega(b), parabola-refined in ln b.

    An extremum must rise or fall by more than ``significance`` against both
    neighbours, which filters solver-level noise on flat curve segments.
    Returns a list of (b_star, omega_star, kind) with kind 'max' or 'min'.
    """
    good = [rec for rec in records if rec.error is None
            and math.isfinite(rec.omega)]
    out = []
    for i in range(1, len(good) - 1):
        w_prev, w_mid, w_next = good[i - 1].omega, good[i].omega, good[i + 1].omega
        if w_mid - w_prev > significance and w_mid - w_next > significance:
            kind = "max"
        elif w_prev - w_mid > significance and w_next - w_mid > significance:
            kind = "min"
        else:
            continue
        xs = np.log([good[i - 1].b, good[i].b, good[i + 1].b])
        ys = np.array([w_prev, w_mid, w_next])
        coef = np.polyfit(xs, ys, 2)
        x_star = -coef[1] / (2.0 * coef[0])
        x_star = min(max(x_star, xs[0]), xs[2])
        out.append((float(np.exp(x_star)), float(np.polyval(coef, x_star)), kind))
    return out


def count_level_crossings(records: list[SweepRecord], level: float) -> int:
    """Sign changes of omega(b) - level along the sorted curve."""
    vals = [rec.omega - level for rec in records
            if rec.error is None and math.isfinite(rec.omega)]
    return sum(1 for u, w in zip(vals, vals[1:]) if u * w < 0.0)


def continuity_check(records: list[SweepRecord],
                     abs_floor: float = 1e-9) -> float:
    """Worst jump ratio against 10x the local secant slope times the step.

    Values well below 1 are the numerical shadow of continuity of omega(b).
    """
    good = [rec for rec in records if rec.error is None
            and math.isfinite(rec.omega)]
    worst = 0.0
    for i in range(1, len(good) - 2):
        db = good[i + 1].b - good[i].b
        jump = abs(good[i + 1].omega - good[i].omega)
        slope_l = abs(good[i].omega - good[i - 1].omega) / (good[i].b - good[i - 1].b)
        slope_r = abs(good[i + 2].omega - good[i + 1].omega) / (good[i + 2].b - good[i + 1].b)
        limit = 10.0 * max(slope_l, slope_r) * db + abs_floor * max(1.0, abs(good[i].omega))
        worst = max(worst, jump / limit)
    return worst


def bifurcation_coefficient(d: int) -> float:
    return 1.0 / (2.0 ** (d / 2.0) * (d - 2.0))


def bifurcation_omega(b: float, d: int) -> float:
    """Small-b branch frequency d - b^2/(2^(d/2) (d-2))."""
    return d - b * b * bifurcation_coefficient(d)


def fit_bifurcation(records: list[SweepRecord], d: int,
                    b_window: float = 0.1) -> FitReport:
    """Deviation of omega(b) from the small-b branch formula, scaled by b^3."""
    pts = [(rec.b, rec.omega) for rec in records
           if rec.error is None and rec.b <= b_window]
    if not pts:
        raise FitDomainError(f"no records with b <= {b_window:g}")
    devs = [abs(om - bifurcation_omega(b, d)) / b**3 for b, om in pts]
    c_max = float(max(devs))
    return FitReport(
        model="Bifurcation",
        params={"coefficient": bifurcation_coefficient(d), "C": c_max},
        residual=c_max,
        window=(min(b for b, _ in pts), max(b for b, _ in pts)),
    )


def fit_large_b(records: list[SweepRecord], d: int, omega_inf: float) -> FitReport:
    """Fit omega(b) ~ omega_inf + A b^(beta/2) sin(alpha1 ln sqrt(b) + delta).

    beta and alpha1 are fixed by the origin linearisation; only the
    amplitude and phase are fit (linearly, via the sin/cos split).  For
    d >= 16 the oscillations are absent and the model does not apply.
    """
    if d >= 16:
        raise ModelNotApplicableError(
            f"omega(b) is monotone for d={d} >= 16; no oscillation to fit")
    from .ode import manifold_eigenvalues

    eig = manifold_eigenvalues(d)
    alpha1, beta = eig.alpha1, eig.beta
    good = [rec for rec in records if rec.error is None
            and math.isfinite(rec.omega)]
    if not good:
        raise FitDomainError("no valid records to fit")
    b_hi = max(rec.b for rec in good)
    period_lnb = 4.0 * math.pi / alpha1
    b_lo = max(1.0, b_hi * math.exp(-1.6 * period_lnb))
    window = [rec for rec in good if b_lo <= rec.b <= b_hi]
    if len(window) < 8 or math.log(max(rec.b for rec in window)
                                   / min(rec.b for rec in window)) < period_lnb:
        raise FitDomainError(
            "fit window must span one full oscillation period in ln b "
            f"({period_lnb:.2f}) with at least 8 points")
    bb = np.array([rec.b for rec in window])
    yy = np.array([rec.omega for rec in window]) - omega_inf
    phase = alpha1 * np.log(np.sqrt(bb))
    env = bb ** (beta / 2.0)
    design = np.column_stack([env * np.sin(phase), env * np.cos(phase)])
    (p, q), *_ = np.linalg.lstsq(design, yy, rcond=None)
    model = design @ np.array([p, q])
    amp = math.hypot(p, q)
    delta = math.atan2(q, p)
    residual = float(np.max(np.abs(yy - model)) / np.max(np.abs(yy)))
    return FitReport(
        model="LargeBOscillation",
        params={"A_tilde": amp, "delta_tilde": delta,
                "beta": beta, "alpha1": alpha1},
        residual=residual,
        window=(float(bb.min()), float(bb.max())),
    )
