from .tensor import GradientError, NonFiniteError, ShapeError, Tensor, as_tensor, is_grad_enabled, no_grad
from .rng import SeededRng, Streams
from .optim import AdamW, ParamGroup, Parameter, adamw_step, lr_schedule, split_decay, zero_grad
from .gradcheck import directional_check, finite_diff_check
from . import ops
from .ops import forward_op

__all__ = [
    "Tensor",
    "as_tensor",
    "no_grad",
    "is_grad_enabled",
    "ShapeError",
    "NonFiniteError",
    "GradientError",
    "SeededRng",
    "Streams",
    "Parameter",
    "ParamGroup",
    "AdamW",
    "adamw_step",
    "lr_schedule",
    "split_decay",
    "zero_grad",
    "finite_diff_check",
    "directional_check",
    "forward_op",
    "ops",
]
