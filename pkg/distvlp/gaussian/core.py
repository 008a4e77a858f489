"""Diagonal-Gaussian distribution representations and their closed forms."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from distvlp.engine import ops
from distvlp.engine.rng import SeededRng
from distvlp.engine.tensor import Tensor, as_tensor
from distvlp.exceptions import DistVlpError

LOG_2PI_PLUS_1 = float(np.log(2.0 * np.pi) + 1.0)


class GaussianError(DistVlpError):
    error_type = "gaussian"


@dataclass(frozen=True)
class DiagGaussianSeq:
    """Per-token N(μ, diag(σ²)) with σ = exp(log_sigma).

    ``mu`` and ``log_sigma`` share a shape ending in the feature axis D; the
    leading axes are tokens (and optionally a batch).
    """

    mu: Tensor
    log_sigma: Tensor

    def __post_init__(self):
        if self.mu.shape != self.log_sigma.shape:
            raise GaussianError(f"mu {self.mu.shape} and log_sigma {self.log_sigma.shape} differ in shape")
        if self.mu.ndim == 0:
            raise GaussianError("a distribution needs a feature axis")

    @property
    def dim(self) -> int:
        return self.mu.shape[-1]

    @property
    def shape(self):
        return self.mu.shape

    def sigma(self) -> Tensor:
        return ops.exp(self.log_sigma)

    def variance(self) -> np.ndarray:
        """σ² for reporting only."""
        return np.exp(2.0 * self.log_sigma.data)

    def token(self, index) -> "GaussianToken":
        return GaussianToken(self.mu[index], self.log_sigma[index])

    def select(self, index) -> "DiagGaussianSeq":
        return DiagGaussianSeq(self.mu[index], self.log_sigma[index])

    def cls(self) -> "DiagGaussianSeq":
        """Leading-position ([CLS]) distributions: ``[..., 0, :]``."""
        return self.select((Ellipsis, 0, slice(None)))

    def detach(self) -> "DiagGaussianSeq":
        return DiagGaussianSeq(self.mu.detach(), self.log_sigma.detach())


GaussianToken = DiagGaussianSeq
"""A single token is the same representation with no token axis (shape ``(D,)``)."""


def _check_dims(g1: DiagGaussianSeq, g2: DiagGaussianSeq, op: str) -> None:
    if g1.dim != g2.dim:
        raise GaussianError(f"{op}: dimension mismatch {g1.dim} vs {g2.dim}")


def w2_squared(g1: DiagGaussianSeq, g2: DiagGaussianSeq) -> Tensor:
    """Squared 2-Wasserstein distance ``||μ₁−μ₂||² + ||σ₁−σ₂||²`` over the last axis.

    Leading axes broadcast, so a ``(N, 1, D)`` against ``(1, N, D)`` pair gives
    the full ``N×N`` table.
    """
    _check_dims(g1, g2, "w2_squared")
    dmu = ops.sub(g1.mu, g2.mu)
    dsigma = ops.sub(g1.sigma(), g2.sigma())
    return ops.add(ops.sum(ops.square(dmu), axis=-1), ops.sum(ops.square(dsigma), axis=-1))


def pairwise_w2(rows: DiagGaussianSeq, cols: DiagGaussianSeq) -> Tensor:
    """``N×M`` table of w2_squared between ``rows`` (N×D) and ``cols`` (M×D)."""
    if rows.mu.ndim != 2 or cols.mu.ndim != 2:
        raise GaussianError(f"pairwise_w2: expected N×D and M×D, got {rows.shape} and {cols.shape}")
    _check_dims(rows, cols, "pairwise_w2")
    n, d = rows.shape
    m = cols.shape[0]
    left = DiagGaussianSeq(rows.mu.reshape(n, 1, d), rows.log_sigma.reshape(n, 1, d))
    right = DiagGaussianSeq(cols.mu.reshape(1, m, d), cols.log_sigma.reshape(1, m, d))
    return w2_squared(left, right)


def pairwise_w2_numpy(mu1: np.ndarray, sigma1: np.ndarray, mu2: np.ndarray, sigma2: np.ndarray) -> np.ndarray:
    """Tape-free table for evaluation; expands the squares to stay O(N·M) in memory."""
    def sq_dist(a, b):
        return (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2.0 * a @ b.T

    return np.maximum(sq_dist(mu1, mu2) + sq_dist(sigma1, sigma2), 0.0)


def entropy(g: DiagGaussianSeq) -> Tensor:
    """Differential entropy per token: ``(d/2)(log 2π + 1) + Σ log σᵢ``."""
    return ops.add(ops.sum(g.log_sigma, axis=-1), 0.5 * g.dim * LOG_2PI_PLUS_1)


def entropy_floor_loss(gs: DiagGaussianSeq, gamma: float) -> Tensor:
    """Mean over tokens of ``max(0, γ − h(token))``."""
    if not np.isfinite(gamma):
        raise GaussianError(f"entropy floor gamma must be finite, got {gamma}")
    return ops.mean(ops.relu(ops.sub(float(gamma), entropy(gs))))


def reparam_sample(g: DiagGaussianSeq, rng: Optional[SeededRng], noise: Optional[np.ndarray] = None) -> Tensor:
    """``z = μ + σ·ε``; ``ε`` is a constant so gradients reach μ and log σ only.

    ``noise`` overrides the draw (tests force ε = 0 through it).
    """
    if noise is None:
        if rng is None:
            raise GaussianError("reparam_sample needs an rng or explicit noise")
        noise = rng.normal(g.shape)
    noise = np.asarray(noise, dtype=np.float64)
    if noise.shape != g.shape:
        raise GaussianError(f"noise shape {noise.shape} does not match distribution shape {g.shape}")
    return ops.add(g.mu, ops.mul(g.sigma(), as_tensor(noise)))


def reparam_stack(g: DiagGaussianSeq, rngs: Sequence[SeededRng]) -> Tensor:
    """``μ`` followed by one draw per rng, stacked on a new leading axis.

    Member 0 carries no noise; member ``s`` equals ``reparam_sample(g, rngs[s - 1])``.
    """
    noise = np.zeros((len(rngs) + 1,) + tuple(g.shape))
    for s, rng in enumerate(rngs, start=1):
        noise[s] = rng.normal(g.shape)
    lead = (1,) + tuple(g.shape)
    return ops.add(ops.reshape(g.mu, lead), ops.mul(ops.reshape(g.sigma(), lead), as_tensor(noise)))


def point_distribution(mu: Tensor) -> DiagGaussianSeq:
    """Degenerate representation used when the PDE is ablated: σ fixed at 1."""
    return DiagGaussianSeq(mu, Tensor(np.zeros(mu.shape)))
