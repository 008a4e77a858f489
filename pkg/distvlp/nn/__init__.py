from .layers import FeedForward, LayerNorm, Linear, Module, ParamFactory
from .pde import ProbabilityDistributionEncoder, act_attention, attention_weights, pde_forward
from .fusion import (
    CrossModalLayer,
    EncodingError,
    ModalityStream,
    MultiHeadAttention,
    ToyEncoder,
    cross_modal_layer,
    toy_encoder,
)
from .model import DistributionVLModel, PairDistributions, build_optimizer, build_viz_optimizer

__all__ = [
    "Module",
    "ParamFactory",
    "Linear",
    "LayerNorm",
    "FeedForward",
    "ProbabilityDistributionEncoder",
    "act_attention",
    "attention_weights",
    "pde_forward",
    "MultiHeadAttention",
    "CrossModalLayer",
    "ModalityStream",
    "ToyEncoder",
    "EncodingError",
    "cross_modal_layer",
    "toy_encoder",
    "DistributionVLModel",
    "PairDistributions",
    "build_optimizer",
    "build_viz_optimizer",
]
