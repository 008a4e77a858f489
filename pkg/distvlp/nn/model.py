"""The full pretraining model: encoders, fusion, distribution encoders and heads."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from distvlp.engine.optim import AdamW, Parameter, ParamGroup, split_decay
from distvlp.engine.rng import SeededRng, Streams
from distvlp.gaussian import DiagGaussianSeq, point_distribution
from models import ModelConfig, OptimConfig, PdeConfig

from .fusion import CrossModalLayer, ModalityStream, ToyEncoder, cross_modal_layer
from .layers import Linear, Module, ParamFactory
from .pde import ProbabilityDistributionEncoder

Probe = Optional[Callable[[str, object], None]]

# Name prefixes of each optimizer family; the visualization head trains separately.
PARAM_FAMILIES: Dict[str, Tuple[str, ...]] = {
    "extractor": ("encoder.",),
    "fusion": ("fusion.",),
    "pde": ("pde.",),
    "heads": ("heads.",),
}
VIZ_PREFIX = "viz."


@dataclass
class PairDistributions:
    """Per-token distributions for the two modalities of one batch."""

    vision: DiagGaussianSeq
    text: DiagGaussianSeq


class DistributionVLModel(Module):
    def __init__(self, cfg: ModelConfig, seed: int, log_tau_init: float):
        self.cfg = cfg
        enc = cfg.encoder
        dim = enc.model_dim
        factory = ParamFactory(SeededRng(seed, Streams.INIT), cfg.init_std)
        self.probe: Probe = None

        self.vision_encoder = ToyEncoder(
            factory, "encoder.vision", "vision", enc.vision_vocab, enc.max_vision_len,
            dim, enc.attn_heads, enc.ffn_hidden, enc.encoder_layers,
        )
        self.text_encoder = ToyEncoder(
            factory, "encoder.text", "text", enc.text_vocab, enc.max_text_len,
            dim, enc.attn_heads, enc.ffn_hidden, enc.encoder_layers, specials=1,
        )
        self.fusion: List[CrossModalLayer] = [
            CrossModalLayer(factory, f"fusion.layer{i}", dim, enc.attn_heads, enc.ffn_hidden) for i in range(enc.layers)
        ]
        self.vision_pde = self.text_pde = self.fused_pde = None
        if cfg.use_pde:
            self.vision_pde = ProbabilityDistributionEncoder(factory, "pde.vision", cfg.pde)
            self.text_pde = ProbabilityDistributionEncoder(factory, "pde.text", cfg.pde)
            self.fused_pde = ProbabilityDistributionEncoder(factory, "pde.fused", cfg.pde)
        self.mlm_head = Linear(factory, "heads.mlm", dim, enc.text_vocab)
        self.itm_head = Linear(factory, "heads.itm", 2 * dim, 2)
        self.log_tau = Parameter(np.array(float(log_tau_init)), "heads.log_tau")

        self.viz_proj = Linear(factory, "viz.proj", dim, cfg.viz_dim)
        self.viz_pde = None
        if cfg.viz_dim % 2 == 0:
            viz_cfg = PdeConfig(model_dim=cfg.viz_dim, heads=1, act=cfg.pde.act, ffn_hidden=max(4, 4 * cfg.viz_dim))
            self.viz_pde = ProbabilityDistributionEncoder(factory, "viz.pde", viz_cfg)

    @property
    def use_pde(self) -> bool:
        return self.cfg.use_pde

    @property
    def mask_id(self) -> int:
        return self.cfg.encoder.mask_id

    def encode(self, vision_tokens: np.ndarray, text_tokens: np.ndarray) -> Tuple[ModalityStream, ModalityStream]:
        vision = self.vision_encoder(vision_tokens, self.probe)
        text = self.text_encoder(text_tokens, self.probe)
        return vision, text

    def _distributions(self, pde: Optional[ProbabilityDistributionEncoder], stream: ModalityStream) -> DiagGaussianSeq:
        if pde is None:
            return point_distribution(stream.hidden)
        return pde(stream.hidden, self.probe)

    def unimodal(self, vision: ModalityStream, text: ModalityStream) -> PairDistributions:
        return PairDistributions(self._distributions(self.vision_pde, vision), self._distributions(self.text_pde, text))

    def fuse(self, vision: ModalityStream, text: ModalityStream, cross: bool = True) -> Tuple[ModalityStream, ModalityStream]:
        for layer in self.fusion:
            vision, text = cross_modal_layer(vision, text, layer, cross=cross, probe=self.probe)
        if self.probe is not None:
            self.probe("fusion_layers", len(self.fusion))
        return vision, text

    def fused(self, vision: ModalityStream, text: ModalityStream) -> PairDistributions:
        """The fused PDE is shared between both streams."""
        vision, text = self.fuse(vision, text)
        return PairDistributions(self._distributions(self.fused_pde, vision), self._distributions(self.fused_pde, text))

    def viz_distributions(self, cls_mu) -> DiagGaussianSeq:
        """2-D distributions from (frozen) [CLS] means; input ``(N, D)``."""
        if self.viz_pde is None:
            raise ValueError(f"visualization head needs an even output dimension, got {self.cfg.viz_dim}")
        projected = self.viz_proj(cls_mu)
        return self.viz_pde(projected.reshape(projected.shape[0], 1, self.cfg.viz_dim)).select((slice(None), 0))

    def named_trunk_parameters(self) -> List[Tuple[str, Parameter]]:
        return [(n, p) for n, p in self.named_parameters() if not n.startswith(VIZ_PREFIX)]

    def named_viz_parameters(self) -> List[Tuple[str, Parameter]]:
        return [(n, p) for n, p in self.named_parameters() if n.startswith(VIZ_PREFIX)]

    def param_families(self) -> Dict[str, List[Tuple[str, Parameter]]]:
        families: Dict[str, List[Tuple[str, Parameter]]] = {name: [] for name in PARAM_FAMILIES}
        for name, param in self.named_trunk_parameters():
            for family, prefixes in PARAM_FAMILIES.items():
                if name.startswith(prefixes):
                    families[family].append((name, param))
                    break
            else:
                raise ValueError(f"parameter {name} belongs to no optimizer family")
        return families


def build_optimizer(model: DistributionVLModel, optim: OptimConfig) -> AdamW:
    """One decayed and one undecayed group per family (biases, norms, log τ skip decay)."""
    rates = {
        "extractor": optim.lr_extractor,
        "fusion": optim.lr_fusion,
        "pde": optim.lr_pde,
        "heads": optim.lr_heads,
    }
    groups = []
    for family, named in model.param_families().items():
        if not named:
            continue
        decay, no_decay = split_decay(named)
        if decay:
            groups.append(ParamGroup(family, decay, rates[family], optim.weight_decay))
        if no_decay:
            groups.append(ParamGroup(f"{family}.no_decay", no_decay, rates[family], 0.0))
    return AdamW(groups, betas=tuple(optim.betas), eps=optim.eps)


def build_viz_optimizer(model: DistributionVLModel, lr: float) -> AdamW:
    decay, no_decay = split_decay(model.named_viz_parameters())
    return AdamW([ParamGroup("viz", decay, lr, 0.0), ParamGroup("viz.no_decay", no_decay, lr, 0.0)])
