"""Pre-training loop: epoch batching, per-step metrics and the final checkpoint."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterator, List, Optional, Sequence

import numpy as np

from config import config
from distvlp.data import Batch, generate_corpus, make_batches
from distvlp.engine.rng import SeededRng, Streams
from distvlp.engine.tensor import NonFiniteError
from distvlp.exceptions import DistVlpError
from distvlp.handlers import MetricsWriter
from distvlp.logging import get_logger
from distvlp.nn import DistributionVLModel, build_optimizer
from distvlp.objectives import pretrain_step
from models import MetricsRecord, PairedExample, RunConfig

from .checkpoint import checkpoint_save


class NonFiniteLossError(DistVlpError):
    """Training produced NaN/inf; ``last_valid_step`` is the last step whose record was written."""

    error_type = "non_finite_loss"

    def __init__(self, step: int, last_valid_step: int, detail: str = ""):
        message = f"non-finite value at step {step} (last valid step {last_valid_step})"
        super().__init__(f"{message}: {detail}" if detail else message)
        self.step = step
        self.last_valid_step = last_valid_step


def build_model(cfg: RunConfig) -> DistributionVLModel:
    return DistributionVLModel(cfg.model, cfg.seed, cfg.loss.log_tau_init)


def stored_run_config(cfg: RunConfig) -> dict:
    """Run settings as persisted next to artifacts; the output location is left out."""
    return cfg.model_dump(mode="json", exclude={"output_dir"})


class Trainer:
    def __init__(
        self,
        cfg: RunConfig,
        train_set: Optional[Sequence[PairedExample]] = None,
        model: Optional[DistributionVLModel] = None,
        run_id: str = "-",
    ):
        self.cfg = cfg
        self.rng = SeededRng(cfg.seed)
        self.model = model if model is not None else build_model(cfg)
        self.optimizer = build_optimizer(self.model, cfg.optim)
        self.train_set = list(train_set) if train_set is not None else generate_corpus(cfg.corpus, cfg.corpus_seed, "train")
        self.log_every = int(config.training_settings.get("log_every", 50))
        self.logger = get_logger("train", {"run_id": run_id})

    def batches(self) -> Iterator[Batch]:
        """Endless stream of batches; epoch ``e`` is shuffled by its own derived stream."""
        shuffle = self.rng.stream(Streams.SHUFFLE)
        epoch = 0
        while True:
            yield from make_batches(self.train_set, self.cfg.batch_size, shuffle.child(epoch))
            epoch += 1

    def _check_parameters(self, step: int) -> None:
        for name, param in self.model.named_trunk_parameters():
            if not np.all(np.isfinite(param.data)):
                raise NonFiniteLossError(step, step - 1, f"parameter {name} became non-finite")

    def run(
        self,
        steps: Optional[int] = None,
        writer: Optional[MetricsWriter] = None,
        on_record: Optional[Callable[[MetricsRecord], None]] = None,
    ) -> List[MetricsRecord]:
        steps = steps if steps is not None else self.cfg.steps
        records: List[MetricsRecord] = []
        batches = self.batches()
        for step in range(1, steps + 1):
            batch = next(batches)
            try:
                record = pretrain_step(batch, self.model, self.optimizer, self.cfg, self.rng, step)
            except NonFiniteError as e:
                self.logger.error(
                    f"Non-finite value in step {step}: {e.message}",
                    extra={"step": step, "action": "train_step", "status": "failed"},
                )
                raise NonFiniteLossError(step, step - 1, e.message) from e
            self._check_parameters(step)
            records.append(record)
            if writer is not None:
                writer.write(record)
            if on_record is not None:
                on_record(record)
            if step % self.log_every == 0 or step == steps:
                self.logger.info(
                    f"step {step}/{steps} loss={record.loss_total:.4f} entropy={record.mean_entropy:.3f} tau={record.tau:.4f}",
                    extra={"action": "train_step", "status": "progress", **record.model_dump()},
                )
        return records


@dataclass
class TrainingResult:
    records: List[MetricsRecord]
    model: DistributionVLModel
    metrics_path: Path
    checkpoint_path: Path
    config_path: Path


def train_run(cfg: RunConfig, out_dir: Path, run_id: str = "-") -> TrainingResult:
    """Full ``train`` command: config snapshot, metrics JSONL and final checkpoint."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    settings = config.training_settings
    config_path = out_dir / "run_config.json"
    metrics_path = out_dir / settings.get("metrics_name", "metrics.jsonl")
    checkpoint_path = out_dir / settings.get("checkpoint_name", "checkpoint.dvlp")

    stored = stored_run_config(cfg)
    config_path.write_text(json.dumps(stored, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    trainer = Trainer(cfg, run_id=run_id)
    with MetricsWriter(metrics_path) as writer:
        records = trainer.run(writer=writer)
    checkpoint_save(trainer.model, checkpoint_path, {"run_config": stored, "step": cfg.steps})
    return TrainingResult(records, trainer.model, metrics_path, checkpoint_path, config_path)
