"""Mean change-point detection for matrix-variate time series."""

from .bootstrap import BootstrapConfig, MultiplierScheme, run_bootstrap
from .core import (
    ADAPTIVE_NORMS,
    DOT,
    MAX,
    MODE1,
    MODE2,
    MatrixSeries,
    Mode,
    NormSpec,
    cusum_process,
    mad_scale,
    mode_norm,
    test_statistic,
)
from .inference import (
    AdaptiveTestResult,
    SingleTestResult,
    adaptive_test,
    low_cost_adaptive_test,
    mode_specific_test,
)
from .segmentation import (
    Segmentation,
    adjusted_rand_index,
    binary_segmentation,
    estimate_changepoint,
    partition_from_changepoints,
)

__version__ = "0.1.0"

__all__ = [
    "ADAPTIVE_NORMS",
    "AdaptiveTestResult",
    "BootstrapConfig",
    "DOT",
    "MAX",
    "MODE1",
    "MODE2",
    "MatrixSeries",
    "Mode",
    "MultiplierScheme",
    "NormSpec",
    "Segmentation",
    "SingleTestResult",
    "adaptive_test",
    "adjusted_rand_index",
    "binary_segmentation",
    "cusum_process",
    "estimate_changepoint",
    "low_cost_adaptive_test",
    "mad_scale",
    "mode_norm",
    "mode_specific_test",
    "partition_from_changepoints",
    "run_bootstrap",
    "test_statistic",
]
