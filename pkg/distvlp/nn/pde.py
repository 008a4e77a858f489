"""Probability Distribution Encoder.

The normalized input is split per head into a μ-half and a σ²-half
(μ dims ``[i·d_k, (i+1)·d_k)``, σ² dims ``D/2 + [i·d_k, (i+1)·d_k)``, with
``d_k = D/(2k)``). Each path runs its own heads, concatenates them, projects
back to D with W_O and finishes with a pre-norm feed-forward block. The μ path
adds the raw input as a residual; the σ² path output is read as log σ.
"""

from __future__ import annotations

import math
from typing import Callable, List, Optional

from distvlp.engine import ops
from distvlp.engine.tensor import ShapeError, Tensor
from distvlp.gaussian import DiagGaussianSeq
from models import PdeConfig

from .layers import FeedForward, LayerNorm, Linear, Module, ParamFactory

Probe = Optional[Callable[[str, object], None]]


def attention_weights(q: Tensor, k: Tensor, act: str) -> Tensor:
    """``Act(Q Kᵀ / √d_k)`` with the act's own row normalization."""
    if q.shape[-1] != k.shape[-1]:
        raise ShapeError(f"attention: query width {q.shape[-1]} differs from key width {k.shape[-1]}")
    scores = ops.scale(ops.matmul(q, ops.transpose(k)), 1.0 / math.sqrt(q.shape[-1]))
    if act == "softmax":
        return ops.softmax_rows(scores)
    if act == "relu_norm":
        return ops.row_normalize(ops.relu(scores))
    if act == "relu2_norm":
        return ops.row_normalize(ops.square(ops.relu(scores)))
    if act == "sigmoid_norm":
        return ops.row_normalize(ops.sigmoid(scores))
    raise ValueError(f"no sequence-level attention for act {act!r}")


def act_attention(q: Tensor, k: Tensor, v: Tensor, act: str, probe: Probe = None) -> Tensor:
    if k.shape[-2] != v.shape[-2]:
        raise ShapeError(f"attention: {k.shape[-2]} keys but {v.shape[-2]} values")
    weights = attention_weights(q, k, act)
    if probe is not None:
        probe("pde_attention", weights.data)
    return ops.matmul(weights, v)


class PdePath(Module):
    def __init__(self, factory: ParamFactory, name: str, cfg: PdeConfig, residual_ffn: bool = True):
        d_k = cfg.head_dim
        self.heads: List[Linear] = []
        self.wo = None
        if cfg.act != "mlp_only":
            self.heads = [Linear(factory, f"{name}.head{i}.wqkv", d_k, 3 * d_k, bias=False) for i in range(cfg.heads)]
            self.wo = Linear(factory, f"{name}.wo", cfg.heads * d_k, cfg.model_dim, bias=False)
        self.ffn = FeedForward(factory, f"{name}.ffn", cfg.model_dim, cfg.ffn_hidden, residual=residual_ffn)

    def multi_head(self, chunks: List[Tensor], act: str, probe: Probe = None) -> Tensor:
        outputs = []
        for chunk, head in zip(chunks, self.heads):
            q, k, v = ops.split(head(chunk), 3)
            outputs.append(act_attention(q, k, v, act, probe))
        return self.wo(ops.concat_last_axis(outputs))


class ProbabilityDistributionEncoder(Module):
    def __init__(self, factory: ParamFactory, name: str, cfg: PdeConfig):
        self.cfg = cfg
        self.norm = LayerNorm(factory, f"{name}.norm", cfg.model_dim)
        mlp_only = cfg.act == "mlp_only"
        self.mu_path = PdePath(factory, f"{name}.mu", cfg)
        self.sigma_path = PdePath(factory, f"{name}.sigma", cfg, residual_ffn=not mlp_only)

    def __call__(self, hidden: Tensor, probe: Probe = None) -> DiagGaussianSeq:
        cfg = self.cfg
        if hidden.ndim < 2 or hidden.shape[-1] != cfg.model_dim:
            raise ShapeError(f"pde: expected (..., T, {cfg.model_dim}) input, got {hidden.shape}")
        normed = self.norm(hidden)
        if cfg.act == "mlp_only":
            mu = self.mu_path.ffn(hidden)
            log_sigma = self.sigma_path.ffn(normed)
            return DiagGaussianSeq(mu, log_sigma)
        chunks = ops.split(normed, 2 * cfg.heads)
        mu_chunks, sigma_chunks = chunks[: cfg.heads], chunks[cfg.heads:]
        mu_mixed = ops.add(hidden, self.mu_path.multi_head(mu_chunks, cfg.act, probe))
        sigma_mixed = self.sigma_path.multi_head(sigma_chunks, cfg.act, probe)
        return DiagGaussianSeq(self.mu_path.ffn(mu_mixed), self.sigma_path.ffn(sigma_mixed))


def pde_forward(hidden: Tensor, pde: ProbabilityDistributionEncoder) -> DiagGaussianSeq:
    return pde(hidden)
