"""Christoffel-weighted least squares and average-case complexity transfer."""

from .complexity import (
    ComplexityProfile,
    Criterion,
    check_exp_hypothesis,
    complexity_profile,
    exp_decay_bound,
    info_complexity,
    transfer_delta_bound,
    transfer_delta_power_bound,
    transfer_log_bound,
    transfer_power_bound,
    verify_transfer,
)
from .estimators import ChristoffelFeatures, ChristoffelRegressor, ChristoffelSampler
from .lsq import (
    LsqFit,
    ScheduleResult,
    a_delta,
    approx_error_sq,
    avg_error_all,
    avg_error_std_empirical,
    fit,
    schedule_m,
    schedule_m_fixed,
)
from .model import (
    Algebraic,
    Finite,
    Geometric,
    ProblemModel,
    RandomFunction,
    Scaled,
    TensorProduct,
    UnivariateWeights,
    eval_basis,
    eval_function,
    sample_function,
    tail_sum,
    trace,
)
from .sampling import (
    DesignMatrix,
    SampleSet,
    build_design,
    christoffel_density,
    concentration_bound,
    draw_samples,
    empirical_failure_rate,
    spectral_deviation,
)
from .tractability import classify_tractability, tractability_report

__version__ = "0.1.0"
