"""2-D confidence ellipses from the visualization head.

The head (projection to 2 dims followed by a 2-D PDE) is fitted on frozen
unimodal [CLS] means of the exported items with the contrastive loss plus
the entropy floor. Semi-axes are ``σᵢ · sqrt(χ²₂(0.95))``.
"""

from __future__ import annotations

from pathlib import Path
from typing import List, Sequence, Union

import numpy as np
from scipy import stats

from distvlp.engine import ops
from distvlp.engine.rng import SeededRng, Streams
from distvlp.engine.tensor import Tensor, no_grad
from distvlp.gaussian import entropy_floor_loss
from distvlp.logging import eval_logger
from distvlp.nn import DistributionVLModel, build_viz_optimizer
from distvlp.objectives import ObjectiveError, dvlc_loss
from models import EllipseRecord, PairedExample, RunConfig

from .retrieval import encode_cls

CONFIDENCE = 0.95
AXIS_SCALE = float(np.sqrt(stats.chi2.ppf(CONFIDENCE, df=2)))


def _require_2d(model: DistributionVLModel) -> None:
    if model.cfg.viz_dim != 2 or model.viz_pde is None:
        raise ObjectiveError(f"ellipse export needs a 2-D visualization head, model has viz_dim={model.cfg.viz_dim}")


def train_viz_head(
    model: DistributionVLModel,
    examples: Sequence[PairedExample],
    cfg: RunConfig,
    steps: int,
    lr: float = 1e-2,
) -> List[float]:
    """Fit only the ``viz.*`` parameters; returns the loss per step."""
    _require_2d(model)
    if len(examples) < 2:
        raise ObjectiveError("the visualization head needs at least 2 items to contrast")
    features = encode_cls(model, examples)
    vision, text = Tensor(features.vision_mu), Tensor(features.text_mu)
    gamma = cfg.loss.resolved_gamma(model.cfg.viz_dim)
    log_tau = Tensor(model.log_tau.data.copy())
    optimizer = build_viz_optimizer(model, lr)
    rng = SeededRng(cfg.seed, Streams.VIZ)
    batch = min(cfg.batch_size, len(examples))
    losses = []
    for step in range(1, steps + 1):
        rows = np.sort(rng.child(step).permutation(len(examples))[:batch])
        gv = model.viz_distributions(vision[rows])
        gt = model.viz_distributions(text[rows])
        loss = dvlc_loss(gv, gt, log_tau, cfg.loss)
        if cfg.loss.alpha > 0:
            reg = ops.scale(ops.add(entropy_floor_loss(gv, gamma), entropy_floor_loss(gt, gamma)), 0.5 * cfg.loss.alpha)
            loss = ops.add(loss, reg)
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
        losses.append(loss.item())
    return losses


def ellipse_records(model: DistributionVLModel, examples: Sequence[PairedExample]) -> List[EllipseRecord]:
    """One record per item and modality, vision first for each item."""
    _require_2d(model)
    features = encode_cls(model, examples)
    with no_grad():
        per_modality = {
            "vision": model.viz_distributions(Tensor(features.vision_mu)),
            "text": model.viz_distributions(Tensor(features.text_mu)),
        }
    records = []
    for i, example in enumerate(examples):
        for modality, g in per_modality.items():
            mu, sigma = g.mu.data[i], g.sigma().data[i]
            records.append(
                EllipseRecord(
                    id=str(i),
                    modality=modality,
                    label=example.concept_id,
                    cx=float(mu[0]),
                    cy=float(mu[1]),
                    ax=float(sigma[0] * AXIS_SCALE),
                    ay=float(sigma[1] * AXIS_SCALE),
                )
            )
    return records


def export_ellipses_svg(records: Sequence[EllipseRecord], file_path: Union[str, Path]) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib.patches import Ellipse

    file_path = Path(file_path)
    plt.rcParams["svg.hashsalt"] = "distvlp"
    labels = sorted({r.label for r in records})
    cmap = plt.get_cmap("tab20", max(len(labels), 1))
    colors = {label: cmap(i) for i, label in enumerate(labels)}

    fig, ax = plt.subplots(figsize=(7, 7))
    for r in records:
        ax.add_patch(
            Ellipse(
                (r.cx, r.cy),
                width=2 * r.ax,
                height=2 * r.ay,
                facecolor=colors[r.label],
                edgecolor=colors[r.label],
                alpha=0.25 if r.modality == "vision" else 0.12,
                linestyle="-" if r.modality == "vision" else "--",
            )
        )
        ax.plot(r.cx, r.cy, "o" if r.modality == "vision" else "^", color=colors[r.label], markersize=3)
    if records:
        xs = [v for r in records for v in (r.cx - r.ax, r.cx + r.ax)]
        ys = [v for r in records for v in (r.cy - r.ay, r.cy + r.ay)]
        ax.set_xlim(min(xs), max(xs))
        ax.set_ylim(min(ys), max(ys))
    ax.set_aspect("equal")
    ax.set_title("95% confidence ellipses (o vision, ^ text)")
    fig.savefig(file_path, format="svg", metadata={"Date": None})
    plt.close(fig)
    eval_logger.info(
        f"Exported SVG with {len(records)} ellipses",
        extra={"action": "export_svg", "status": "success"},
    )
