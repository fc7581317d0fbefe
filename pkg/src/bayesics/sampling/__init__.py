"""Monte Carlo precision planning and the adaptive iid sampler."""

from bayesics.sampling.schema import PrecisionTarget, SamplePlan
from bayesics.sampling.plan import (
    estimate_density_at_quantile,
    mean_sample_size,
    plan_from_pilot,
    quantile_sample_size,
    sample_size_ratio,
)
from bayesics.sampling.engine import AdaptiveSampler, AdaptiveDraws, RandomStreams

__all__ = [
    "AdaptiveDraws",
    "AdaptiveSampler",
    "PrecisionTarget",
    "RandomStreams",
    "SamplePlan",
    "estimate_density_at_quantile",
    "mean_sample_size",
    "plan_from_pilot",
    "quantile_sample_size",
    "sample_size_ratio",
]
