from .model_config import EncoderConfig, ModelConfig, PdeConfig
from .loss_config import LossConfig, MaskingConfig
from .corpus_config import SyntheticCorpusConfig
from .run_config import OptimConfig, RunConfig
from .records import EllipseRecord, MetricsRecord, PairedExample
from .presets import PRESETS

__all__ = [
    "PdeConfig",
    "EncoderConfig",
    "ModelConfig",
    "LossConfig",
    "MaskingConfig",
    "SyntheticCorpusConfig",
    "OptimConfig",
    "RunConfig",
    "MetricsRecord",
    "EllipseRecord",
    "PairedExample",
    "PRESETS",
]
