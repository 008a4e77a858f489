"""Trainable parameters, AdamW with decoupled weight decay and the LR schedule."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .tensor import GradientError, Tensor

DEFAULT_BETAS = (0.9, 0.999)
DEFAULT_EPS = 1e-8
DEFAULT_WEIGHT_DECAY = 0.01


class Parameter(Tensor):
    __slots__ = ("adam_m", "adam_v", "step_count")

    def __init__(self, data, name: str):
        super().__init__(data, requires_grad=True, name=name)
        self.adam_m = np.zeros_like(self.data)
        self.adam_v = np.zeros_like(self.data)
        self.step_count = 0

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.shape}, step={self.step_count})"


def zero_grad(params: Iterable[Parameter]) -> None:
    for p in params:
        p.zero_grad()


def adamw_step(
    params: Iterable[Parameter],
    lr: float,
    betas: Tuple[float, float] = DEFAULT_BETAS,
    weight_decay: float = DEFAULT_WEIGHT_DECAY,
    eps: float = DEFAULT_EPS,
) -> None:
    """One AdamW update in place. Gradients are left for the caller to zero."""
    if lr <= 0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    params = list(params)
    for p in params:
        if p.grad is None:
            raise GradientError(f"adamw_step: parameter {p.name!r} has no gradient")
    beta1, beta2 = betas
    for p in params:
        g = p.grad
        p.step_count += 1
        t = p.step_count
        p.adam_m = beta1 * p.adam_m + (1.0 - beta1) * g
        p.adam_v = beta2 * p.adam_v + (1.0 - beta2) * g * g
        m_hat = p.adam_m / (1.0 - beta1 ** t)
        v_hat = p.adam_v / (1.0 - beta2 ** t)
        p.data = p.data - lr * (m_hat / (np.sqrt(v_hat) + eps) + weight_decay * p.data)


def lr_schedule(step: int, total_steps: int, warmup_steps: int, base_lr: float) -> float:
    """Linear warm-up to ``base_lr`` then linear decay reaching 0 at ``total_steps``.

    ``step`` counts from 1.
    """
    step = max(1, int(step))
    if warmup_steps > 0 and step <= warmup_steps:
        return base_lr * step / warmup_steps
    remaining = max(1, total_steps - warmup_steps)
    return base_lr * max(total_steps - step, 0) / remaining


@dataclass
class ParamGroup:
    name: str
    params: List[Parameter]
    lr: float
    weight_decay: float = DEFAULT_WEIGHT_DECAY


@dataclass
class AdamW:
    groups: List[ParamGroup]
    betas: Tuple[float, float] = DEFAULT_BETAS
    eps: float = DEFAULT_EPS
    last_lrs: dict = field(default_factory=dict)

    @property
    def params(self) -> List[Parameter]:
        return [p for g in self.groups for p in g.params]

    def zero_grad(self) -> None:
        zero_grad(self.params)

    def step(self, lr_scale: float = 1.0) -> None:
        for group in self.groups:
            if not group.params:
                continue
            lr = group.lr * lr_scale
            adamw_step(group.params, lr, self.betas, group.weight_decay, self.eps)
            self.last_lrs[group.name] = lr


def split_decay(named: Sequence[Tuple[str, Parameter]]) -> Tuple[List[Parameter], List[Parameter]]:
    """Biases, layer-norm affines and scalars skip weight decay."""
    decay, no_decay = [], []
    for name, p in named:
        leaf = name.rsplit(".", 1)[-1]
        if p.ndim < 2 or leaf in ("bias", "gamma", "beta"):
            no_decay.append(p)
        else:
            decay.append(p)
    return decay, no_decay
