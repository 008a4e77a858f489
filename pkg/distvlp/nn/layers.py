"""Parameter containers and the small layers everything else is built from."""

from __future__ import annotations

from typing import Iterator, List, Sequence, Tuple

import numpy as np

from distvlp.engine import ops
from distvlp.engine.optim import Parameter
from distvlp.engine.rng import SeededRng
from distvlp.engine.tensor import Tensor


class ParamFactory:
    """Creates named parameters in a fixed draw order from one init stream.

    Weights ~ N(0, std²) truncated at ±2σ; biases and layer-norm shifts start
    at 0, layer-norm scales at 1.
    """

    def __init__(self, rng: SeededRng, std: float = 0.02):
        self.rng = rng
        self.std = std

    def weight(self, name: str, shape: Sequence[int]) -> Parameter:
        return Parameter(self.rng.truncated_normal(shape, self.std), name)

    def zeros(self, name: str, shape: Sequence[int]) -> Parameter:
        return Parameter(np.zeros(tuple(shape)), name)

    def ones(self, name: str, shape: Sequence[int]) -> Parameter:
        return Parameter(np.ones(tuple(shape)), name)


class Module:
    def named_parameters(self) -> Iterator[Tuple[str, Parameter]]:
        for value in vars(self).values():
            if isinstance(value, Parameter):
                yield value.name, value
            elif isinstance(value, Module):
                yield from value.named_parameters()
            elif isinstance(value, (list, tuple)):
                for item in value:
                    if isinstance(item, Module):
                        yield from item.named_parameters()
                    elif isinstance(item, Parameter):
                        yield item.name, item

    def parameters(self) -> List[Parameter]:
        return [p for _, p in self.named_parameters()]

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def fill_(self, value: float) -> None:
        """Overwrite every parameter; tests use it to build degenerate models."""
        for p in self.parameters():
            p.data = np.full(p.shape, float(value))


class Linear(Module):
    def __init__(self, factory: ParamFactory, name: str, in_dim: int, out_dim: int, bias: bool = True):
        self.weight = factory.weight(f"{name}.weight", (in_dim, out_dim))
        self.bias = factory.zeros(f"{name}.bias", (out_dim,)) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        out = ops.matmul(x, self.weight)
        return ops.add(out, self.bias) if self.bias is not None else out


class LayerNorm(Module):
    def __init__(self, factory: ParamFactory, name: str, dim: int):
        self.gamma = factory.ones(f"{name}.gamma", (dim,))
        self.beta = factory.zeros(f"{name}.beta", (dim,))

    def __call__(self, x: Tensor) -> Tensor:
        return ops.add(ops.mul(ops.layer_norm(x), self.gamma), self.beta)


class FeedForward(Module):
    """Pre-norm two-layer GELU block: ``x + W₂·gelu(W₁·LN(x))``."""

    def __init__(self, factory: ParamFactory, name: str, dim: int, hidden: int, residual: bool = True):
        self.norm = LayerNorm(factory, f"{name}.norm", dim)
        self.fc1 = Linear(factory, f"{name}.fc1", dim, hidden)
        self.fc2 = Linear(factory, f"{name}.fc2", hidden, dim)
        self.residual = residual

    def __call__(self, x: Tensor) -> Tensor:
        out = self.fc2(ops.gelu(self.fc1(self.norm(x))))
        return ops.add(x, out) if self.residual else out
