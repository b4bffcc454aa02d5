"""Stochastic chemostat with white-noise dilution: Wiener and OU noise,
Euler-Maruyama on the Ito system, RK4 on the conjugated random ODE, and
absorbing-set, pullback and extinction diagnostics."""

__version__ = "0.1.0"

from .brownian import GENERATOR, GridError, WienerPath, coarsen, generate, shift, value_at
from .model import (
    BASE_CONSTANTS,
    POLE_FLOOR,
    ChemostatParams,
    DomainError,
    RandomState,
    StochState,
    dbar,
    deterministic_rhs,
    extinction_condition,
    ito_fields,
    mu,
    random_rhs,
    random_rhs_direct,
    stratonovich_fields,
    transform,
    transform_inv,
)
from .ou import DEFAULT_BURN_IN, OUPath, ergodic_averages, ou_from_wiener
from .integrate import (
    NumericalFailure,
    Trajectory,
    euler_maruyama,
    euler_maruyama_ensemble,
    read_trajectory_csv,
    rk4_random,
    simulate_conjugated,
)
from .analysis import (
    AbsorbingSpec,
    ClassificationReport,
    PullbackResult,
    Verdict,
    absorption_time,
    check_invariants,
    classify,
    distance_to_b0,
    distance_to_washout_line,
    in_absorbing_set,
    pullback_experiment,
    q_closed_form,
    washout_geometry,
)
from .convergence import ConvergenceTable, conjugation_gap_study, em_strong_convergence
from .campaigns import CAMPAIGNS, DEFAULT_INITIAL, run_ensemble, run_figures
from ._kernels import BACKEND
