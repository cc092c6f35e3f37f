"""fbmlab: a numerical laboratory for fractional Brownian motion with
long-memory increments: exact sampling on arbitrary grids, fractional
calculus with a log-weighted extension of the pairing integral, Gaussian
small-deviation estimates, and the constructive build of adapted step
integrands that represent endpoint-observable targets as pathwise
integrals."""

from .errors import (
    AdmissibilityError,
    DivergenceError,
    FbmLabError,
    GridDomainError,
    NonconvergenceError,
    ParameterError,
    PSDRepairError,
    RegularityError,
    ResolutionError,
)
from .grid import TimeGrid
from .paths import (
    CovarianceModel,
    HurstParam,
    SamplePath,
    fbm_covariance,
    increment_covariance,
    increment_covariance_matrix,
    modulus_statistic,
    path_from_csv,
    path_from_json,
    path_to_csv,
    path_to_json,
    sample_fbm,
    sample_fbm_batch,
)
from .deviations import (
    MCEstimate,
    RateRegime,
    autocovariance_rho,
    cov_sq_series_constant,
    gaussian_small_dev_bound,
    mc_quadratic_small_dev,
    mc_small_deviation,
    rate_regime,
    small_dev_rate,
    squared_cov_sum,
)
from .fraccalc import (
    FracOrder,
    LogWeight,
    QuadratureConfig,
    RegularityCertificate,
    SampledFunction,
    extended_fractional_integral,
    mollified_derivative,
    mollified_function,
    mollified_integral,
    mollifier_discrepancy,
    rl_derivative_left,
    rl_derivative_right,
    rl_integral_left,
    weighted_l1_norm,
    young_sum_integral,
)
from .representation import (
    Block,
    CausalityAudit,
    PartitionScheme,
    RepresentationTrace,
    StepIntegrand,
    TargetProcess,
    build_partition,
    build_representation,
    case1_step,
    case2_step,
    construction_grid,
    mu_window,
    tail_weighted_norm_diagnostic,
    target_constant,
    target_lipschitz,
    target_log_holder,
    wiener_target_grid,
)

__version__ = "0.1.0"
