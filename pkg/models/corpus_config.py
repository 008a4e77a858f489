from typing import Optional

from pydantic import BaseModel, Field, model_validator


class SyntheticCorpusConfig(BaseModel):
    """Paired two-modality corpus with tunable cross-concept ambiguity."""

    concepts: int = Field(default=32, ge=1)
    vision_vocab: int = Field(default=256, ge=1)
    text_vocab: int = Field(default=256, ge=1)
    vision_tokens: int = Field(default=12, ge=0, description="Content tokens per vision sequence")
    text_tokens: int = Field(default=10, ge=0, description="Content tokens per text sequence")
    synonym_count: int = Field(default=4, ge=1, description="Pool size per concept per modality")
    overlap: float = Field(default=0.25, ge=0, le=1, description="Share of a pool common with the sibling concept")
    noise_rate: float = Field(default=0.1, ge=0, le=1)
    train_size: int = Field(default=2048, ge=1)
    test_size: int = Field(default=256, ge=1)
    seed: Optional[int] = Field(default=None, ge=0, description="Defaults to the run seed")

    @model_validator(mode="after")
    def _check_partition(self) -> "SyntheticCorpusConfig":
        need = self.synonym_count * self.concepts
        for name, vocab in (("vision_vocab", self.vision_vocab), ("text_vocab", self.text_vocab)):
            if need > vocab:
                raise ValueError(f"{name} {vocab} cannot hold {self.concepts} concepts x {self.synonym_count} tokens")
        return self
