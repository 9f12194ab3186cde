"""Simulate calibrated retail-demand forecasts and evaluate them fairly.

The library generates an assortment of items with hidden selling rates,
realizes one day of Poisson (or gamma-blurred Poisson) sales, and scores
honest or deliberately distorted forecasts three ways: a global bias test,
forward-looking prediction buckets, and backward-looking outcome groups.
An analytic oracle supplies the exact conditional means both evaluation
directions converge to, making the hindsight bias of outcome grouping
measurable rather than anecdotal.
"""

__version__ = "0.1.0"

from .distributions import (
    DemandProcess,
    GammaBlurredPoisson,
    GammaPrior,
    LogNormalPrior,
    MixturePrior,
    PoissonProcess,
    RatePrior,
    UniformPrior,
)
from .errors import ConfigError, DataError, HindsightError, QuadratureError
from .evaluation import (
    BiasTestResult,
    BucketReport,
    BucketSpec,
    CalibrationVerdict,
    FixedWidth,
    LogWidth,
    OutcomeGroupReport,
    Quantile,
    backward_groups,
    bootstrap_bias_test,
    calibration_verdict,
    forward_buckets,
    global_bias_test,
    global_means,
    make_buckets,
)
from .market import (
    Assortment,
    ConstantMean,
    DistortionStrategy,
    Exaggerate,
    ForecastOutcomePair,
    Honest,
    Permutation,
    apply_distortion,
    build_pairs,
    generate_assortment,
    realize_sales,
)
from .oracle import (
    AdaptiveInterval,
    GaussLaguerre,
    OracleContext,
    QuadratureSpec,
)

__all__ = [
    "__version__",
    "GammaPrior",
    "LogNormalPrior",
    "UniformPrior",
    "MixturePrior",
    "RatePrior",
    "PoissonProcess",
    "GammaBlurredPoisson",
    "DemandProcess",
    "Assortment",
    "ForecastOutcomePair",
    "Honest",
    "Permutation",
    "ConstantMean",
    "Exaggerate",
    "DistortionStrategy",
    "generate_assortment",
    "realize_sales",
    "apply_distortion",
    "build_pairs",
    "BucketSpec",
    "FixedWidth",
    "Quantile",
    "LogWidth",
    "BucketReport",
    "OutcomeGroupReport",
    "BiasTestResult",
    "CalibrationVerdict",
    "global_means",
    "global_bias_test",
    "bootstrap_bias_test",
    "make_buckets",
    "forward_buckets",
    "backward_groups",
    "calibration_verdict",
    "OracleContext",
    "QuadratureSpec",
    "AdaptiveInterval",
    "GaussLaguerre",
    "HindsightError",
    "ConfigError",
    "DataError",
    "QuadratureError",
]
