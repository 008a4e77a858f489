from typing import Literal, Optional, Tuple

from pydantic import BaseModel, Field, model_validator

from .corpus_config import SyntheticCorpusConfig
from .loss_config import LossConfig, MaskingConfig
from .model_config import ModelConfig


class OptimConfig(BaseModel):
    """AdamW settings with one learning rate per parameter family."""

    lr_extractor: float = Field(default=1e-3, gt=0, description="Toy unimodal encoders")
    lr_fusion: float = Field(default=1e-3, gt=0, description="Cross-modal transformer")
    lr_pde: float = Field(default=2e-3, gt=0, description="All PDEs")
    lr_heads: float = Field(default=1e-3, gt=0, description="Classifiers and temperature")
    betas: Tuple[float, float] = (0.9, 0.999)
    eps: float = Field(default=1e-8, gt=0)
    weight_decay: float = Field(default=0.01, ge=0)
    warmup_steps: int = Field(default=100, ge=0)


class RunConfig(BaseModel):
    """Everything one train/eval invocation needs."""

    preset: Literal["toy", "full"] = "toy"
    model: ModelConfig = Field(default_factory=ModelConfig)
    loss: LossConfig = Field(default_factory=LossConfig)
    masking: MaskingConfig = Field(default_factory=MaskingConfig)
    corpus: SyntheticCorpusConfig = Field(default_factory=SyntheticCorpusConfig)
    optim: OptimConfig = Field(default_factory=OptimConfig)
    steps: int = Field(default=2000, ge=1)
    batch_size: int = Field(default=32, ge=2)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    output_dir: Optional[str] = None

    @model_validator(mode="after")
    def _check_alignment(self) -> "RunConfig":
        enc, corpus = self.model.encoder, self.corpus
        if enc.vision_vocab != corpus.vision_vocab or enc.text_vocab != corpus.text_vocab:
            raise ValueError("model encoder vocabularies must match the corpus vocabularies")
        if enc.max_vision_len < corpus.vision_tokens or enc.max_text_len < corpus.text_tokens:
            raise ValueError("model max sequence lengths are shorter than the corpus sequences")
        if self.batch_size > corpus.train_size:
            raise ValueError(f"batch_size {self.batch_size} exceeds train_size {corpus.train_size}")
        return self

    @property
    def corpus_seed(self) -> int:
        return self.corpus.seed if self.corpus.seed is not None else self.seed
