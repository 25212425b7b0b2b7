"""Stationary states of the harmonically trapped Schrodinger-Poisson system.

Shooting-method solvers for regular and singular spherically symmetric
stationary states in dimensions d >= 6, frequency-curve sweeps, and the
integral-identity checks that certify converged profiles.
"""

__version__ = "0.1.0"

from .ode import (
    EventSetup,
    Mode,
    ProblemSpec,
    State,
    Termination,
    Trajectory,
    integrate,
    manifold_eigenvalues,
    manifold_start_singular,
    rhs_regular,
    rhs_singular,
    series_start_regular,
)
from .shooting import (
    Classification,
    ClassKind,
    ShootResult,
    classify,
    find_excited_state,
    find_ground_state,
    omega_extract,
    uniqueness_probe,
)
from .singular import (
    SingularResult,
    find_singular_state,
    fit_omega_inf_law,
    singular_profile_to_physical,
)
from .analysis import (
    FitReport,
    IdentityReport,
    SweepRecord,
    fit_bifurcation,
    fit_large_b,
    mass_energy,
    newton_potential_check,
    omega_range_check,
    pohozaev_report,
    sweep_omega_b,
)

__all__ = [
    "__version__",
    "Classification",
    "ClassKind",
    "EventSetup",
    "FitReport",
    "IdentityReport",
    "Mode",
    "ProblemSpec",
    "ShootResult",
    "SingularResult",
    "State",
    "SweepRecord",
    "Termination",
    "Trajectory",
    "classify",
    "find_excited_state",
    "find_ground_state",
    "find_singular_state",
    "fit_bifurcation",
    "fit_large_b",
    "fit_omega_inf_law",
    "integrate",
    "manifold_eigenvalues",
    "manifold_start_singular",
    "mass_energy",
    "newton_potential_check",
    "omega_extract",
    "omega_range_check",
    "pohozaev_report",
    "rhs_regular",
    "rhs_singular",
    "series_start_regular",
    "singular_profile_to_physical",
    "sweep_omega_b",
    "uniqueness_probe",
]
