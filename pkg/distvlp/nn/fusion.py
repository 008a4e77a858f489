"""Toy unimodal encoders and the dual-stream cross-modal transformer."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Literal, Optional, Tuple

import numpy as np

from distvlp.engine import ops
from distvlp.engine.tensor import ShapeError, Tensor
from distvlp.exceptions import DistVlpError

from .layers import FeedForward, LayerNorm, Linear, Module, ParamFactory

Probe = Optional[Callable[[str, object], None]]
Modality = Literal["vision", "text"]


class EncodingError(DistVlpError):
    """Token ids outside the embedding table or sequences over the length limit."""

    error_type = "invalid_tokens"


@dataclass
class ModalityStream:
    """Hidden states ``(..., T, D)`` of one modality; position 0 is [CLS]."""

    hidden: Tensor
    modality: Modality

    @property
    def length(self) -> int:
        return self.hidden.shape[-2]

    def cls(self) -> Tensor:
        return self.hidden[(Ellipsis, 0, slice(None))]


class MultiHeadAttention(Module):
    def __init__(self, factory: ParamFactory, name: str, dim: int, heads: int):
        if dim % heads:
            raise ShapeError(f"attention width {dim} is not divisible by {heads} heads")
        self.heads = heads
        self.wq = Linear(factory, f"{name}.wq", dim, dim, bias=False)
        self.wk = Linear(factory, f"{name}.wk", dim, dim, bias=False)
        self.wv = Linear(factory, f"{name}.wv", dim, dim, bias=False)
        self.wo = Linear(factory, f"{name}.wo", dim, dim, bias=False)

    def _split_heads(self, x: Tensor) -> Tensor:
        *lead, length, dim = x.shape
        n = len(lead)
        x = ops.reshape(x, (*lead, length, self.heads, dim // self.heads))
        return ops.transpose(x, (*range(n), n + 1, n, n + 2))

    def _merge_heads(self, x: Tensor) -> Tensor:
        *lead, heads, length, width = x.shape
        n = len(lead)
        x = ops.transpose(x, (*range(n), n + 1, n, n + 2))
        return ops.reshape(x, (*lead, length, heads * width))

    def __call__(self, query: Tensor, context: Tensor, probe: Probe = None, tag: str = "attention") -> Tensor:
        if query.shape[:-2] != context.shape[:-2]:
            raise ShapeError(f"attention: batch shapes {query.shape[:-2]} and {context.shape[:-2]} differ")
        q = self._split_heads(self.wq(query))
        k = self._split_heads(self.wk(context))
        v = self._split_heads(self.wv(context))
        width = q.shape[-1]
        weights = ops.softmax_rows(ops.scale(ops.matmul(q, ops.transpose(k)), 1.0 / math.sqrt(width)))
        if probe is not None:
            probe(tag, weights.data)
        return self.wo(self._merge_heads(ops.matmul(weights, v)))


class SelfAttentionBlock(Module):
    def __init__(self, factory: ParamFactory, name: str, dim: int, heads: int, hidden: int):
        self.norm = LayerNorm(factory, f"{name}.norm", dim)
        self.attn = MultiHeadAttention(factory, f"{name}.attn", dim, heads)
        self.ffn = FeedForward(factory, f"{name}.ffn", dim, hidden)

    def __call__(self, x: Tensor, probe: Probe = None, tag: str = "self_attention") -> Tensor:
        normed = self.norm(x)
        return self.ffn(ops.add(x, self.attn(normed, normed, probe, tag)))


class CrossModalLayer(Module):
    """Self-attention per stream, then each stream queries the other.

    Pre-norm residual form::

        I' = F(I + SA(LN I))              T' = F(T + SA(LN T))
        I'' = I' + CA(LN I', LN T')      T'' = T' + CA(LN T', LN I')
        out = F(x)                       F(x) = x + FFN(LN x)

    Each attention sublayer is followed by its own feed-forward sublayer.
    """

    def __init__(self, factory: ParamFactory, name: str, dim: int, heads: int, hidden: int):
        self.sa_norm_v = LayerNorm(factory, f"{name}.vision.sa_norm", dim)
        self.sa_v = MultiHeadAttention(factory, f"{name}.vision.sa", dim, heads)
        self.sa_norm_t = LayerNorm(factory, f"{name}.text.sa_norm", dim)
        self.sa_t = MultiHeadAttention(factory, f"{name}.text.sa", dim, heads)
        self.sa_ffn_v = FeedForward(factory, f"{name}.vision.sa_ffn", dim, hidden)
        self.sa_ffn_t = FeedForward(factory, f"{name}.text.sa_ffn", dim, hidden)
        self.ca_norm_v = LayerNorm(factory, f"{name}.vision.ca_norm", dim)
        self.ca_v = MultiHeadAttention(factory, f"{name}.vision.ca", dim, heads)
        self.ca_norm_t = LayerNorm(factory, f"{name}.text.ca_norm", dim)
        self.ca_t = MultiHeadAttention(factory, f"{name}.text.ca", dim, heads)
        self.ffn_v = FeedForward(factory, f"{name}.vision.ffn", dim, hidden)
        self.ffn_t = FeedForward(factory, f"{name}.text.ffn", dim, hidden)

    def __call__(self, vision: Tensor, text: Tensor, cross: bool = True, probe: Probe = None) -> Tuple[Tensor, Tensor]:
        nv = self.sa_norm_v(vision)
        nt = self.sa_norm_t(text)
        vision = self.sa_ffn_v(ops.add(vision, self.sa_v(nv, nv, probe, "vision_self")))
        text = self.sa_ffn_t(ops.add(text, self.sa_t(nt, nt, probe, "text_self")))
        if cross:
            nv = self.ca_norm_v(vision)
            nt = self.ca_norm_t(text)
            vision, text = (
                ops.add(vision, self.ca_v(nv, nt, probe, "vision_cross")),
                ops.add(text, self.ca_t(nt, nv, probe, "text_cross")),
            )
        return self.ffn_v(vision), self.ffn_t(text)


def cross_modal_layer(
    vision: ModalityStream, text: ModalityStream, layer: CrossModalLayer, cross: bool = True, probe: Probe = None
) -> Tuple[ModalityStream, ModalityStream]:
    if vision.hidden.shape[-1] != text.hidden.shape[-1]:
        raise ShapeError(f"streams disagree on width: {vision.hidden.shape[-1]} vs {text.hidden.shape[-1]}")
    v, t = layer(vision.hidden, text.hidden, cross=cross, probe=probe)
    return ModalityStream(v, "vision"), ModalityStream(t, "text")


class ToyEncoder(Module):
    """Embedding lookup plus a few self-attention blocks.

    The table holds the content vocabulary, then ``specials`` extra rows (text
    uses one for [MASK]), then the [CLS] row, which is prepended to every
    sequence.
    """

    def __init__(
        self,
        factory: ParamFactory,
        name: str,
        modality: Modality,
        vocab: int,
        max_len: int,
        dim: int,
        heads: int,
        hidden: int,
        layers: int,
        specials: int = 0,
    ):
        self.modality = modality
        self.max_len = max_len
        self.rows = vocab + specials + 1
        self.cls_id = self.rows - 1
        self.embedding = factory.weight(f"{name}.embedding", (self.rows, dim))
        self.positions = factory.weight(f"{name}.positions", (max_len + 1, dim))
        self.blocks: List[SelfAttentionBlock] = [
            SelfAttentionBlock(factory, f"{name}.block{i}", dim, heads, hidden) for i in range(layers)
        ]
        self.norm = LayerNorm(factory, f"{name}.norm", dim)

    def __call__(self, tokens: np.ndarray, probe: Probe = None) -> ModalityStream:
        tokens = np.asarray(tokens)
        if tokens.ndim not in (1, 2) or (tokens.size and not np.issubdtype(tokens.dtype, np.integer)):
            raise EncodingError(f"{self.modality} tokens must be a 1-D or 2-D integer array, got {tokens.dtype}{tokens.shape}")
        tokens = tokens.astype(np.int64)
        length = tokens.shape[-1]
        if length > self.max_len:
            raise EncodingError(f"{self.modality} sequence length {length} exceeds limit {self.max_len}")
        if tokens.size and (tokens.min() < 0 or tokens.max() >= self.cls_id):
            bad = tokens[(tokens < 0) | (tokens >= self.cls_id)][0]
            raise EncodingError(f"{self.modality} token id {int(bad)} is outside [0, {self.cls_id})")
        cls = np.full(tokens.shape[:-1] + (1,), self.cls_id, dtype=np.int64)
        ids = np.concatenate([cls, tokens], axis=-1)
        x = ops.add(self.embedding[ids], self.positions[: length + 1])
        for i, block in enumerate(self.blocks):
            x = block(x, probe, f"{self.modality}_encoder{i}")
        return ModalityStream(self.norm(x), self.modality)


def toy_encoder(tokens: np.ndarray, encoder: ToyEncoder) -> ModalityStream:
    return encoder(tokens)
