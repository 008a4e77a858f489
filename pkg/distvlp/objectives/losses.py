"""Distribution-based contrastive, masked-token and matching objectives."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.special import softmax

from distvlp.engine import ops
from distvlp.engine.rng import SeededRng
from distvlp.engine.tensor import Tensor, no_grad
from distvlp.data.masking import IGNORE_LABEL
from distvlp.exceptions import DistVlpError
from distvlp.gaussian import DiagGaussianSeq, pairwise_w2, reparam_sample, reparam_stack, w2_squared
from models import LossConfig

Classifier = Callable[[Tensor], Tensor]


class ObjectiveError(DistVlpError):
    """A loss was asked to run on a batch it is undefined for."""

    error_type = "invalid_objective_input"


def _require_rng(K: int, rng: Optional[SeededRng], op: str) -> None:
    if K < 0:
        raise ObjectiveError(f"{op}: sample count must be non-negative, got {K}")
    if K and rng is None:
        raise ObjectiveError(f"{op}: drawing {K} samples needs an rng")


def similarity(g_vision: DiagGaussianSeq, g_text: DiagGaussianSeq, cfg: LossConfig) -> Tensor:
    """``a·W₂² + b``; ``a < 0`` so closer distributions score higher."""
    return ops.add(ops.scale(w2_squared(g_vision, g_text), cfg.a), cfg.b)


def similarity_table(vision_cls: DiagGaussianSeq, text_cls: DiagGaussianSeq, cfg: LossConfig) -> Tensor:
    return ops.add(ops.scale(pairwise_w2(vision_cls, text_cls), cfg.a), cfg.b)


def contrastive_from_similarities(sim: Tensor, log_tau: Tensor) -> Tensor:
    """Row (vision→text) InfoNCE mean plus column (text→vision) InfoNCE mean."""
    n = sim.shape[0]
    if sim.ndim != 2 or sim.shape[1] != n:
        raise ObjectiveError(f"contrastive loss needs a square similarity table, got {sim.shape}")
    if n < 2:
        raise ObjectiveError("contrastive loss needs at least 2 pairs to have negatives")
    logits = ops.mul(sim, ops.exp(ops.scale(log_tau, -1.0)))
    targets = np.arange(n)
    return ops.add(ops.cross_entropy(logits, targets), ops.cross_entropy(ops.transpose(logits), targets))


def dvlc_loss(vision_cls: DiagGaussianSeq, text_cls: DiagGaussianSeq, log_tau: Tensor, cfg: LossConfig) -> Tensor:
    if vision_cls.mu.ndim != 2 or vision_cls.shape[0] < 2:
        raise ObjectiveError(f"dvlc_loss needs N >= 2 [CLS] pairs, got shape {vision_cls.shape}")
    return contrastive_from_similarities(similarity_table(vision_cls, text_cls, cfg), log_tau)


def _masked_positions(labels: np.ndarray) -> Tuple[Tuple[np.ndarray, ...], np.ndarray]:
    labels = np.asarray(labels, dtype=np.int64)
    selected = labels != IGNORE_LABEL
    if not selected.any():
        raise ObjectiveError("dmlm_loss needs at least one masked position")
    index = np.nonzero(selected)
    if labels.ndim == 1:
        weights = np.full(len(index[0]), 1.0 / len(index[0]))
    else:
        per_row = selected.sum(axis=-1)
        rows = int((per_row > 0).sum())
        weights = 1.0 / (per_row[index[0]] * rows)
    return index, weights


def dmlm_loss(
    text: DiagGaussianSeq,
    labels: np.ndarray,
    classifier: Classifier,
    K: int,
    rng: Optional[SeededRng],
) -> Tensor:
    """Cross-entropy of the mean and ``K`` samples, averaged with weight ``1/(K+1)``.

    ``labels`` matches the token axes of ``text`` and holds ``IGNORE_LABEL``
    outside the masked set. Positions are averaged within an example, then
    over the batch. Sample ``s`` draws its noise from ``rng.child(s)``.
    """
    _require_rng(K, rng, "dmlm_loss")
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != text.shape[:-1]:
        raise ObjectiveError(f"labels {labels.shape} do not match distributions {text.shape}")
    index, weights = _masked_positions(labels)
    chosen = text.select(index)
    targets = labels[index]
    if K == 0:
        return ops.cross_entropy(classifier(chosen.mu), targets, weights)
    # all members go through the classifier as one row block, member-major
    members = reparam_stack(chosen, [rng.child(s) for s in range(1, K + 1)])
    rows = ops.reshape(members, ((K + 1) * len(targets), chosen.shape[-1]))
    return ops.cross_entropy(classifier(rows), np.tile(targets, K + 1), np.tile(weights, K + 1) / (K + 1))


@dataclass
class MaskedTokenPrediction:
    """Pooled distribution over the vocabulary plus each member's own prediction."""

    probabilities: np.ndarray
    samples: np.ndarray


def dmlm_predict(
    g: DiagGaussianSeq, classifier: Classifier, K: int, rng: Optional[SeededRng]
) -> MaskedTokenPrediction:
    """Mean of the softmax outputs on μ and ``K`` reparameterized draws."""
    _require_rng(K, rng, "dmlm_predict")
    with no_grad():
        members = [classifier(g.mu).data]
        for s in range(1, K + 1):
            members.append(classifier(reparam_sample(g, rng.child(s))).data)
    samples = softmax(np.stack(members), axis=-1)
    return MaskedTokenPrediction(probabilities=samples.mean(axis=0), samples=samples)


def ditm_loss(
    vision_cls: DiagGaussianSeq,
    text_cls: DiagGaussianSeq,
    labels: np.ndarray,
    classifier: Classifier,
    K: int,
    rng: Optional[SeededRng],
) -> Tensor:
    """Binary matching on ``[v, w]`` features of the means and of ``K`` sample pairs."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (vision_cls.shape[0],):
        raise ObjectiveError(f"match labels {labels.shape} do not match batch {vision_cls.shape}")
    _require_rng(K, rng, "ditm_loss")
    if np.unique(labels).size < 2:
        raise ObjectiveError("ditm_loss needs both matched and unmatched pairs in the batch")
    if K == 0:
        return ops.cross_entropy(classifier(ops.concat_last_axis([vision_cls.mu, text_cls.mu])), labels)
    v = reparam_stack(vision_cls, [rng.child(0).child(s) for s in range(1, K + 1)])
    w = reparam_stack(text_cls, [rng.child(1).child(s) for s in range(1, K + 1)])
    n = len(labels)
    features = ops.reshape(ops.concat_last_axis([v, w]), ((K + 1) * n, v.shape[-1] + w.shape[-1]))
    return ops.cross_entropy(classifier(features), np.tile(labels, K + 1))


def build_itm_pairs(n: int, rng: SeededRng) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Row indices for vision and text plus match labels (1 matched, 0 not).

    A random half of the rows (rounded down) get a partner drawn uniformly from
    the other rows, swapping the image or the text with equal probability.
    """
    if n < 2:
        raise ObjectiveError(f"matching pairs need a batch of at least 2, got {n}")
    vision_index = np.arange(n)
    text_index = np.arange(n)
    labels = np.ones(n, dtype=np.int64)
    negatives = rng.permutation(n)[: n // 2]
    offsets = rng.integers(1, n, size=len(negatives))
    swap_image = rng.uniform((len(negatives),)) < 0.5
    for row, offset, image in zip(negatives, offsets, swap_image):
        partner = (row + offset) % n
        if image:
            vision_index[row] = partner
        else:
            text_index[row] = partner
        labels[row] = 0
    return vision_index, text_index, labels
