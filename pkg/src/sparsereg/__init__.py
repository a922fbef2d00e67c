"""Sparse linear regression with selective L1 penalization.

Provides a coordinate-descent solver for the selectively penalized Lasso, a
two-stage fit-select-refit procedure, exhaustive design-matrix diagnostics,
estimation-error bound evaluators, greedy approximation certificates, and a
reproducible experiment harness with a CLI.
"""

from .bounds import (
    BOUND_EVALUATORS,
    BoundInputs,
    BoundReport,
    QuantitySet,
    corollary41_rhs,
    corollary51_rhs,
    corollary61_rhs,
    corollary71_conditions,
    corollary81_rhs,
    dantzig_constants,
    dantzig_report,
    evaluate_bound,
    lambda_floor,
    theorem41_rhs,
    theorem71_conditions,
    theorem81_rhs,
)
from .core import GramMatrix, gram, p_norm, residual_correlation, support_threshold, tail_norm
from .diagnostics import (
    DEFAULT_BUDGET,
    IncoherenceReport,
    SubsetQuantities,
    check_prop31,
    gamma,
    identity_deviation,
    incoherence_bounds,
    mutual_coherence,
    omega,
    pi,
    rho_mu,
    subset_quantities,
    theta,
    theta_bar,
)
from .experiments import (
    AggregateTable,
    SimConfig,
    TrialRecord,
    augment_random_features,
    default_lambda_grid,
    emit_outputs,
    generate_synthetic,
    load_tabular_dataset,
    read_aggregate_csv,
    run_holdout,
    run_simulation,
    validate_bound_montecarlo,
)
from .greedy import CertificateResult, GreedyTrace, greedy_correct, prop51_certificate
from .solver import LassoFit, PenaltySpec, SolverConfig, fit_lasso, kkt_residual, objective
from .two_stage import (
    SelectionRule,
    TuningResult,
    TwoStageResult,
    cv_fold_indices,
    run_two_stage,
    select_features,
    tune_sequential,
)

__version__ = "0.1.0"
