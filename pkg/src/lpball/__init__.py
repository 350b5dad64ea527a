"""Central limit theorems for projections of random points in l_p balls.

Analytic limit variances, exact samplers for the projection statistic Y_n,
Kolmogorov-Smirnov diagnostics and convergence-rate experiments.
"""

from .analytic import (
    LimitVariance,
    covariance_abs_powers,
    j_floor,
    moment_Mp,
    sigma2,
    variance_v,
    variance_w,
)
from .bounds import (
    K_BE,
    BoundConstants,
    MomentTriple,
    berry_esseen_bound,
    gaussish_check,
    gaussish_tail_bound,
    separating_check,
    thm_a_bound_shape,
    thm_b_bound_shape,
    thm_c_bound_shape,
)
from .errors import ConfigError, DomainError, HypothesisError, NumericalError
from .experiments import (
    ConvergenceRow,
    ExperimentConfig,
    InsufficientSignalError,
    KRule,
    RateFit,
    envelope_check,
    fit_rate,
    run_convergence,
)
from .kernels import BACKEND
from .ks import (
    EmpiricalCDF,
    KSReport,
    dkw_radius,
    ks_gaussian_bound_lipschitz,
    ks_gaussian_bound_quarter,
    ks_gaussian_exact,
    ks_one_sample_gaussian,
    ks_two_sample,
    tv_gaussian,
)
from .models import ModelSpec, WSpec
from .rng import RngStream, derive_stream_id
from .samplers import (
    SampleBatch,
    sample_ball_point,
    sample_ball_points,
    sample_decomposition,
    sample_p_gaussian,
    sample_projnorm_direct,
    sample_projnorm_identity_fixed,
    sample_projnorm_identity_random,
    sample_w,
    sample_yn,
)

__version__ = "0.1.0"
