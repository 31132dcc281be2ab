"""Hyperbolic deep RL with stabilized (RMSNorm + learned scaling) encoders."""

from ._core import (
    ConfigError,
    ParseError,
    boundcheck_violations,
    config_hash,
    conformal_bound,
    conformal_factor,
    default_config,
    gradcheck,
    hl_gauss_decode,
    hl_gauss_encode,
    hyperboloid_exp0,
    metrics_columns,
    metrics_header,
    normalize_config,
    optimal_return,
    poincare_exp0,
    read_metrics_csv,
    rmsnorm,
    run_cli,
    train,
)
from .metrics import METRICS_COLUMNS, load_metrics

__all__ = [
    "ConfigError",
    "METRICS_COLUMNS",
    "ParseError",
    "boundcheck_violations",
    "config_hash",
    "conformal_bound",
    "conformal_factor",
    "default_config",
    "gradcheck",
    "hl_gauss_decode",
    "hl_gauss_encode",
    "hyperboloid_exp0",
    "load_metrics",
    "metrics_columns",
    "metrics_header",
    "normalize_config",
    "optimal_return",
    "poincare_exp0",
    "read_metrics_csv",
    "rmsnorm",
    "run_cli",
    "train",
]
