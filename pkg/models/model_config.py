from typing import Literal

from pydantic import BaseModel, Field, model_validator

PdeAct = Literal["softmax", "relu_norm", "relu2_norm", "sigmoid_norm", "mlp_only"]


class PdeConfig(BaseModel):
    """Probability Distribution Encoder sizes and activation variant."""

    model_dim: int = Field(default=64, ge=2, description="Feature size D")
    heads: int = Field(default=2, ge=1, description="Head count k; each path gets D/(2k) per head")
    act: PdeAct = Field(default="softmax", description="Sequence-level activation + normalization")
    ffn_hidden: int = Field(default=128, ge=1, description="Hidden width of the feed-forward stage")

    @model_validator(mode="after")
    def _check_split(self) -> "PdeConfig":
        if self.model_dim % (2 * self.heads):
            raise ValueError(f"model_dim {self.model_dim} must be divisible by 2*heads = {2 * self.heads}")
        return self

    @property
    def head_dim(self) -> int:
        return self.model_dim // (2 * self.heads)


class EncoderConfig(BaseModel):
    """Toy unimodal encoders and the dual-stream cross-modal transformer."""

    model_dim: int = Field(default=64, ge=1)
    attn_heads: int = Field(default=4, ge=1)
    layers: int = Field(default=2, ge=1, description="Cross-modal layer count N_L")
    encoder_layers: int = Field(default=2, ge=1, description="Self-attention layers per toy encoder")
    ffn_hidden: int = Field(default=128, ge=1)
    vision_vocab: int = Field(default=256, ge=1)
    text_vocab: int = Field(default=256, ge=1)
    max_vision_len: int = Field(default=12, ge=0)
    max_text_len: int = Field(default=10, ge=0)

    @model_validator(mode="after")
    def _check_heads(self) -> "EncoderConfig":
        if self.model_dim % self.attn_heads:
            raise ValueError(f"model_dim {self.model_dim} must be divisible by attn_heads {self.attn_heads}")
        return self

    @property
    def mask_id(self) -> int:
        """[MASK] sits just past the text content vocabulary."""
        return self.text_vocab


class ModelConfig(BaseModel):
    encoder: EncoderConfig = Field(default_factory=EncoderConfig)
    pde: PdeConfig = Field(default_factory=PdeConfig)
    use_pde: bool = Field(default=True, description="False runs the point-representation ablation")
    viz_dim: int = Field(default=2, ge=1, description="Output dimension of the visualization head")
    init_std: float = Field(default=0.02, gt=0)

    @model_validator(mode="after")
    def _check_dims(self) -> "ModelConfig":
        if self.encoder.model_dim != self.pde.model_dim:
            raise ValueError(
                f"encoder model_dim {self.encoder.model_dim} and pde model_dim {self.pde.model_dim} must agree"
            )
        return self
