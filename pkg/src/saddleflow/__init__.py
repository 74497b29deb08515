"""Primal-dual gradient flows with exponential stability certificates.

The package builds continuous-time saddle dynamics for equality,
inequality and two-sided constrained convex programs, constructs
quadratic Lyapunov certificates for them, verifies the certificates by
matrix-inequality sweeps, integrates the flows with a contraction-rate
guarantee for the explicit Euler step, and measures decay rates against
the exact spectral abscissa on linear instances.
"""

from .certificates import (
    CertificateVariant,
    LmiReport,
    LyapunovCertificate,
    RankCertificateAux,
    build_certificate_eq,
    build_certificate_ineq,
    build_certificate_rank,
    build_p_matrix,
    condition_number,
    gamma_block_margin,
    lmi_check,
    lmi_sweep,
    lyapunov_value,
    rank_block_margin,
    rank_inequality_margins,
    solve_c_rank,
    xi_bound,
)
from .dynamics import (
    AffineVectorField,
    State,
    StateDerivative,
    aug_pdgd_field,
    aug_pdgd_ts_field,
    effective_multiplier,
    gamma_coefficients,
    pdgd_eq_field,
    penalty_value,
    soft_threshold,
    vector_field,
)
from .equilibrium import Equilibrium, KktResidual, kkt_residual, solve_equilibrium
from .errors import (
    DimensionMismatchError,
    DivergedError,
    InfeasibleError,
    InvalidBandError,
    MaxIterationsError,
    NonFiniteFieldError,
    NoSlackError,
    NotSymmetricError,
    RankDeficientError,
    SaddleflowError,
)
from .experiments import (
    ExperimentSpec,
    build_problem,
    fit_decay_rate,
    gen_equality_qp,
    gen_logistic_ineq,
    pick_step_size,
    run_experiment,
)
from .fileio import load_problem, read_csv, save_problem, write_csv, write_metadata
from .integrator import (
    StepCertificate,
    Trajectory,
    choose_step_size,
    euler_step,
    lipschitz_bound,
    rk4_step,
    simulate,
    step_size_admissible,
)
from .problem import (
    ConstrainedProblem,
    DynamicsParams,
    EqualityConstraints,
    InequalityConstraints,
    LogisticObjective,
    ObjectiveOracle,
    QuadraticObjective,
    SpectralBounds,
    TwoSidedConstraints,
    ValidationReport,
    spectral_bounds,
    validate_problem,
)
from .spectral import (
    EtaSweepResult,
    LtiSystem,
    certified_rate,
    eta_sweep,
    lti_matrix,
    saturation_knee,
)

__version__ = "0.1.0"

__all__ = [
    "AffineVectorField",
    "CertificateVariant",
    "ConstrainedProblem",
    "DimensionMismatchError",
    "DivergedError",
    "DynamicsParams",
    "EqualityConstraints",
    "Equilibrium",
    "EtaSweepResult",
    "ExperimentSpec",
    "InequalityConstraints",
    "InfeasibleError",
    "InvalidBandError",
    "KktResidual",
    "LmiReport",
    "LogisticObjective",
    "LtiSystem",
    "LyapunovCertificate",
    "MaxIterationsError",
    "NoSlackError",
    "NonFiniteFieldError",
    "NotSymmetricError",
    "ObjectiveOracle",
    "QuadraticObjective",
    "RankCertificateAux",
    "RankDeficientError",
    "SaddleflowError",
    "SpectralBounds",
    "State",
    "StateDerivative",
    "StepCertificate",
    "Trajectory",
    "TwoSidedConstraints",
    "ValidationReport",
    "aug_pdgd_field",
    "aug_pdgd_ts_field",
    "build_certificate_eq",
    "build_certificate_ineq",
    "build_certificate_rank",
    "build_p_matrix",
    "build_problem",
    "certified_rate",
    "choose_step_size",
    "condition_number",
    "effective_multiplier",
    "eta_sweep",
    "euler_step",
    "fit_decay_rate",
    "gamma_block_margin",
    "gamma_coefficients",
    "gen_equality_qp",
    "gen_logistic_ineq",
    "kkt_residual",
    "lipschitz_bound",
    "lmi_check",
    "lmi_sweep",
    "load_problem",
    "lti_matrix",
    "lyapunov_value",
    "pdgd_eq_field",
    "penalty_value",
    "pick_step_size",
    "rank_block_margin",
    "rank_inequality_margins",
    "read_csv",
    "rk4_step",
    "run_experiment",
    "saturation_knee",
    "save_problem",
    "simulate",
    "solve_c_rank",
    "solve_equilibrium",
    "spectral_bounds",
    "step_size_admissible",
    "validate_problem",
    "write_csv",
    "write_metadata",
    "xi_bound",
]
