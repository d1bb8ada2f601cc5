"""Convergence studies, configuration and the command line interface."""
from .config import Config, ConfigError, load_config, parse_config
from .norms import (
    backward_difference_error,
    DegenerateReferenceError,
    NormKind,
    fit_rate,
    fit_rate_with_residual,
    norm_gram,
    relative_error,
    state_error,
    time_discrete_norm,
)
from .studies import RateReport, StudySpec, injection, run_thick_scaling, run_time_convergence, snap_dt
