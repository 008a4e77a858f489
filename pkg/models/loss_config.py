import math
from typing import Optional

from pydantic import BaseModel, Field, field_validator

PAPER_DIM = 768
PAPER_GAMMA = 300.0


class LossConfig(BaseModel):
    """Constants of the three objectives and the entropy floor."""

    a: float = Field(default=-0.005, description="Similarity scale (negative)")
    b: float = Field(default=6.0, description="Similarity shift")
    alpha: float = Field(default=0.01, ge=0, description="Weight of the entropy-floor term")
    gamma: Optional[float] = Field(default=None, description="Entropy floor; None rescales 300 by D/768")
    K: int = Field(default=5, ge=0, description="Reparameterized samples per distribution")
    log_tau_init: float = Field(default=math.log(0.07), description="Initial log temperature")

    @field_validator("a")
    @classmethod
    def _negative_scale(cls, v: float) -> float:
        if v >= 0:
            raise ValueError(f"a must be negative, got {v}")
        return v

    def resolved_gamma(self, model_dim: int) -> float:
        if self.gamma is not None:
            return float(self.gamma)
        return model_dim / PAPER_DIM * PAPER_GAMMA


class MaskingConfig(BaseModel):
    """Token selection and replacement policy for masked-token prediction."""

    select_prob: float = Field(default=0.15, ge=0, le=1)
    mask_frac: float = Field(default=0.8, ge=0, le=1)
    random_frac: float = Field(default=0.1, ge=0, le=1)
    keep_frac: float = Field(default=0.1, ge=0, le=1)

    @field_validator("keep_frac")
    @classmethod
    def _fractions_sum(cls, v: float, info) -> float:
        total = v + info.data.get("mask_frac", 0.0) + info.data.get("random_frac", 0.0)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"mask/random/keep fractions must sum to 1, got {total}")
        return v
