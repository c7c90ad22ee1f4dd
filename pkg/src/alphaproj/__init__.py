"""Relative alpha-entropy projections on finite alphabets."""
from .divergence import (
    kl_divergence,
    log_convexity_gap,
    relative_alpha_entropy,
    relative_alpha_entropy_normalized,
    renyi_entropy,
)
from .errors import (
    AlphaProjError,
    DegenerateDenominator,
    DimensionMismatch,
    InadmissibleTheta,
    Infeasible,
    InfiniteTerm,
    NotConverged,
    NotInFamily,
    SingularPair,
    TooLarge,
)
from .families import (
    ExtendedPowerLawFamily,
    LinearFamily,
    PowerLawFamily,
    extended_member_check,
    linear_membership,
    orthogonal_linear_family,
    power_law_member,
    reparametrize,
    reparametrize_theta,
    tilt_coefficients,
)
from .forward_projection import (
    ProjectionResult,
    SolverOptions,
    Status,
    forward_project,
    kkt_certificate,
    objective_gradient,
    projected_gradient,
    pythagorean_check,
)
from .kernels import BACKEND
from .measures import (
    Alphabet,
    ProbMeasure,
    alpha_norm,
    as_measure,
    as_weights,
    e_alpha,
    escort,
    geometric_mixture,
    ln_alpha,
    ln_alpha_mixture,
    total_variation,
)
from .oracle import GridSpec, grid_forward_oracle, grid_reverse_oracle, highprec_divergence
from .reverse_projection import (
    Case,
    IterativeResult,
    ReverseOutcome,
    SampleSet,
    ScanResult,
    binomial_family,
    closure_sequence,
    estimating_equation_residual,
    iterative_log_convex_minimize,
    mean_power_likelihood,
    mmple_fit,
    parametric_reverse_scan,
    reverse_project,
    score,
)

__version__ = "0.1.0"
