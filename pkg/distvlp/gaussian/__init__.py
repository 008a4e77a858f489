from .core import (
    DiagGaussianSeq,
    GaussianError,
    GaussianToken,
    entropy,
    entropy_floor_loss,
    pairwise_w2,
    pairwise_w2_numpy,
    point_distribution,
    reparam_sample,
    reparam_stack,
    w2_squared,
)

__all__ = [
    "DiagGaussianSeq",
    "GaussianToken",
    "GaussianError",
    "w2_squared",
    "pairwise_w2",
    "pairwise_w2_numpy",
    "entropy",
    "entropy_floor_loss",
    "reparam_sample",
    "reparam_stack",
    "point_distribution",
]
