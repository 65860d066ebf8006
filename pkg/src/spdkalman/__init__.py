"""Adaptive Kalman filtering with SPD-guaranteed noise covariance estimation.

The package estimates unknown process and measurement noise covariances of
a linear time-varying system online, from a measurement-difference
regression, and keeps every estimate symmetric positive definite by
solving the per-step least-squares problem on the SPD manifold with a
Riemannian trust-region method. A plain recursive least-squares baseline
(no positivity guarantee) is included for comparison, along with the
simulation harness and CLI used to benchmark both.
"""

from .validation import ContractError, ExcitationError, NotSpdError
from .symvec import (
    btr,
    duplication,
    kron_h,
    kron_u,
    sel_matrix,
    symmetrize,
    unuvec,
    unvech,
    uvec,
    vech,
    vech_dim,
    vech_len,
)
from .spd import (
    SpdMatrix,
    TangentPair,
    ai_inner,
    egrad_to_rgrad,
    ehess_to_rhess,
    geodesic,
    pair_inner,
    pair_norm,
    retract,
    spd_sqrt,
)
from .mda import (
    CoeffWindow,
    GramianBounds,
    RegressorSample,
    SystemModel,
    check_uniform_bounds,
    coeff_window,
    ctrl_gramian,
    obs_gramian,
    phi,
    regressor,
    residual,
)
from .rls import (
    ThetaEstimate,
    initial_estimate,
    matrices_to_theta,
    rls_update,
    theta_to_matrices,
)
from .objective import ObjectiveContext, eps_shift, eps_unshift
from .trust_region import RtrTrace, TrustRegionParams, quad_model, rtr_solve, tcg
from .kalman import (
    AdaptiveKalman,
    FilterConfig,
    FilterHistory,
    FilterState,
    StepResult,
    actual_cov_step,
    akf_step,
    optimal_kf_step,
    run_adaptive_filter,
)
from .estimator import AdaptiveKalmanFilter
from .simulation import (
    BENCHMARK_Q,
    BENCHMARK_R,
    ExperimentConfig,
    MetricRow,
    Trajectory,
    benchmark_model,
    benchmark_system,
    csv_header,
    emit_csv,
    metric_rows,
    run_experiment,
    simulate,
)

__version__ = "0.1.0"

__all__ = [
    "ContractError",
    "ExcitationError",
    "NotSpdError",
    "btr",
    "duplication",
    "kron_h",
    "kron_u",
    "sel_matrix",
    "symmetrize",
    "unuvec",
    "unvech",
    "uvec",
    "vech",
    "vech_dim",
    "vech_len",
    "SpdMatrix",
    "TangentPair",
    "ai_inner",
    "egrad_to_rgrad",
    "ehess_to_rhess",
    "geodesic",
    "pair_inner",
    "pair_norm",
    "retract",
    "spd_sqrt",
    "CoeffWindow",
    "GramianBounds",
    "RegressorSample",
    "SystemModel",
    "check_uniform_bounds",
    "coeff_window",
    "ctrl_gramian",
    "obs_gramian",
    "phi",
    "regressor",
    "residual",
    "ThetaEstimate",
    "initial_estimate",
    "matrices_to_theta",
    "rls_update",
    "theta_to_matrices",
    "ObjectiveContext",
    "eps_shift",
    "eps_unshift",
    "RtrTrace",
    "TrustRegionParams",
    "quad_model",
    "rtr_solve",
    "tcg",
    "AdaptiveKalman",
    "FilterConfig",
    "FilterHistory",
    "FilterState",
    "StepResult",
    "actual_cov_step",
    "akf_step",
    "optimal_kf_step",
    "run_adaptive_filter",
    "AdaptiveKalmanFilter",
    "BENCHMARK_Q",
    "BENCHMARK_R",
    "ExperimentConfig",
    "MetricRow",
    "Trajectory",
    "benchmark_model",
    "benchmark_system",
    "csv_header",
    "emit_csv",
    "metric_rows",
    "run_experiment",
    "simulate",
    "__version__",
]
