from typing import List, Literal

from pydantic import BaseModel, ConfigDict, Field


class PairedExample(BaseModel):
    """One synthetic vision sequence and one text sequence sharing a concept."""

    model_config = ConfigDict(populate_by_name=True)

    concept_id: int = Field(alias="concept", ge=0)
    vision_tokens: List[int] = Field(alias="vision")
    text_tokens: List[int] = Field(alias="text")


class MetricsRecord(BaseModel):
    """Scalars of one pre-training step, one JSONL line each."""

    step: int = Field(ge=0)
    loss_total: float
    loss_dmlm: float
    loss_ditm: float
    loss_dvlc: float
    loss_reg: float
    mean_entropy: float
    tau: float

    def bookkeeping_gap(self, alpha: float) -> float:
        expected = self.loss_dmlm + self.loss_ditm + self.loss_dvlc + alpha * self.loss_reg
        return abs(self.loss_total - expected)


class EllipseRecord(BaseModel):
    """Axis-aligned 95% confidence ellipse of a 2-D distribution."""

    id: str
    modality: Literal["vision", "text"]
    label: int
    cx: float
    cy: float
    ax: float = Field(gt=0)
    ay: float = Field(gt=0)
