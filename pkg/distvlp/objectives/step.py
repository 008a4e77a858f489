"""One optimization step over the three forward passes."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List

import numpy as np

from distvlp.data import IGNORE_LABEL, Batch, mask_tokens
from distvlp.engine import ops
from distvlp.engine.gradcheck import assert_finite_grads
from distvlp.engine.optim import AdamW, lr_schedule
from distvlp.engine.rng import SeededRng, Streams
from distvlp.engine.tensor import Tensor, no_grad
from distvlp.gaussian import DiagGaussianSeq, entropy, entropy_floor_loss
from distvlp.nn import DistributionVLModel
from models import MetricsRecord, RunConfig

from .losses import ObjectiveError, build_itm_pairs, ditm_loss, dmlm_loss, dvlc_loss


@dataclass
class StepLosses:
    """Graph-carrying loss terms of one step plus every PDE output they used."""

    dmlm: Tensor
    ditm: Tensor
    dvlc: Tensor
    distributions: List[DiagGaussianSeq] = field(default_factory=list)


def sample_count(model: DistributionVLModel, cfg: RunConfig) -> int:
    return cfg.loss.K if model.use_pde else 0


def compute_losses(batch: Batch, model: DistributionVLModel, cfg: RunConfig, rng: SeededRng, step: int) -> StepLosses:
    """Masked-token pass, matching pass and contrastive pass on the same batch."""
    if len(batch) < 2:
        raise ObjectiveError(f"a pre-training step needs a batch of at least 2, got {len(batch)}")
    K = sample_count(model, cfg)
    samples = rng.stream(Streams.SAMPLE).child(step)
    enc = cfg.model.encoder

    masked = mask_tokens(batch.text, rng.stream(Streams.MASK).child(step), enc.mask_id, enc.text_vocab, cfg.masking)
    vision, text = model.encode(batch.vision, masked.tokens)
    mlm = model.fused(vision, text)
    labels = np.concatenate([np.full((len(batch), 1), IGNORE_LABEL, dtype=np.int64), masked.labels], axis=1)
    dmlm = dmlm_loss(mlm.text, labels, model.mlm_head, K, samples.child(0))

    vision_index, text_index, match = build_itm_pairs(len(batch), rng.stream(Streams.ITM).child(step))
    vision, text = model.encode(batch.vision[vision_index], batch.text[text_index])
    itm = model.fused(vision, text)
    ditm = ditm_loss(itm.vision.cls(), itm.text.cls(), match, model.itm_head, K, samples.child(1))

    vision, text = model.encode(batch.vision, batch.text)
    uni = model.unimodal(vision, text)
    dvlc = dvlc_loss(uni.vision.cls(), uni.text.cls(), model.log_tau, cfg.loss)

    produced = [mlm.vision, mlm.text, itm.vision, itm.text, uni.vision, uni.text] if model.use_pde else []
    return StepLosses(dmlm, ditm, dvlc, produced)


def entropy_regularizer(distributions: List[DiagGaussianSeq], gamma: float) -> Tensor:
    """Mean of the entropy-floor hinge over every PDE output of the step."""
    terms = [entropy_floor_loss(g, gamma) for g in distributions]
    return ops.scale(ops.add_n(terms), 1.0 / len(terms))


def mean_entropy(distributions: List[DiagGaussianSeq]) -> float:
    if not distributions:
        return 0.0
    return float(np.mean([entropy(g.detach()).data.mean() for g in distributions]))


def pretrain_step(
    batch: Batch,
    model: DistributionVLModel,
    optimizer: AdamW,
    cfg: RunConfig,
    rng: SeededRng,
    step: int,
) -> MetricsRecord:
    """Forward three times, backpropagate the combined objective, apply AdamW.

    With ``alpha = 0`` the regularizer is still measured but never enters the
    graph.
    """
    losses = compute_losses(batch, model, cfg, rng, step)
    alpha = cfg.loss.alpha
    gamma = cfg.loss.resolved_gamma(cfg.model.encoder.model_dim)

    reg_value = 0.0
    total = ops.add_n([losses.dmlm, losses.ditm, losses.dvlc])
    if losses.distributions:
        if alpha > 0:
            reg = entropy_regularizer(losses.distributions, gamma)
            total = ops.add(total, ops.scale(reg, alpha))
            reg_value = reg.item()
        else:
            with no_grad():
                reg_value = entropy_regularizer([g.detach() for g in losses.distributions], gamma).item()

    tau = float(np.exp(model.log_tau.data))
    optimizer.zero_grad()
    total.backward()
    assert_finite_grads(optimizer.params, where=f"step {step}")
    optimizer.step(lr_schedule(step, cfg.steps, cfg.optim.warmup_steps, 1.0))

    dmlm, ditm, dvlc = losses.dmlm.item(), losses.ditm.item(), losses.dvlc.item()
    return MetricsRecord(
        step=step,
        loss_total=total.item(),
        loss_dmlm=dmlm,
        loss_ditm=ditm,
        loss_dvlc=dvlc,
        loss_reg=reg_value,
        mean_entropy=mean_entropy(losses.distributions),
        tau=tau,
    )
