"""Optimal and subspace-constrained Bayesian estimation with single-mode Gaussian states."""

from .bayes import (
    EstimationProblem,
    GaussianPrior,
    GridPrior,
    LossMap,
    QuadratureConfig,
    UniformPrior,
    Weight,
    averaged_moment,
    prior_lambda,
    prior_loss,
)
from .fock import (
    ConvergenceError,
    FockOperator,
    OracleSolution,
    TruncationError,
    averaged_states_fock,
    gaussian_to_fock,
    global_msl,
    pm_msl_operator_pvm,
    poly_to_fock,
    solve_lyapunov,
    solve_oracle,
    verify_theorem1,
    weighted_norm_sq,
)
from .gaussian import (
    GaussianState,
    ParametricGaussianModel,
    encode,
    gaussian_moment,
    is_faithful,
    make_coherent,
    make_thermal,
    make_vacuum,
)
from .homodyne import (
    HomodyneMeasurement,
    PolynomialEstimator,
    PosteriorMeanEstimator,
    classical_msl,
    pm_msl_homodyne,
    posterior_mean,
    relative_msl,
    simulate_single_shot,
    strategy_from_spm,
)
from .phase_space import ONE, P, Q, PhasePolynomial, format_poly, jordan_product, moyal_star, parse_poly
from .solver import (
    OperatorBasis,
    ProjectedSPM,
    build_system,
    constrained_estimator,
    constrained_msl_diagonal,
    optimize_homodyne_angle,
    orthogonalize,
    resolve_basis,
    solve_projected_spm,
)

__version__ = "0.1.0"
