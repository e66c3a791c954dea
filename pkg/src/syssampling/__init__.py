"""Estimators of a population mean under linear systematic sampling.

The sample mean, ratio, product, exponential ratio-type and transformed
difference-exponential estimators, their first-order bias/MSE, and an exact
enumeration engine to check those approximations.
"""

from .design import SystematicSample, draw_sample, enumerate_samples, random_start
from .errors import (
    DataError,
    DegenerateVariateError,
    NumericalError,
    SamplingError,
    SingularSystemError,
)
from .estimators import (
    ESTIMATORS,
    TransformConstants,
    est_exp_ratio_t3,
    est_mean,
    est_product_t2,
    est_ratio_t1,
    est_transformed_t4,
    optimal_constants,
)
from .evaluate import (
    ComparisonRow,
    ExactMoments,
    compare_theory_exact,
    exact_design_eval,
    forest_summary,
    generate_population,
    rho_sweep_t4,
)
from .population import (
    MomentSet,
    Population,
    SummaryStats,
    intraclass_correlation,
    load_population,
    moments_from_population,
    moments_from_summary,
    read_population,
    write_population,
)
from .theory import (
    TheoreticalMoments,
    bias_t3,
    bias_t4,
    mse_t3,
    mse_t4,
    mse_t4_min,
    pre_table,
    var_t0,
    var_t1,
    var_t2,
)

__version__ = "0.1.0"
