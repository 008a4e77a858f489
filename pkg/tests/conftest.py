import os
import sys
import tempfile
from pathlib import Path

# Route log files away from the project tree before the config singleton loads.
os.environ.setdefault("DISTVLP_LOG_DIR", tempfile.mkdtemp(prefix="distvlp-logs-"))
sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

import numpy as np
import pytest

from config.core import _deep_merge
from distvlp.engine import SeededRng
from distvlp.nn import DistributionVLModel
from models import RunConfig

TINY = {
    "model": {
        "encoder": {
            "model_dim": 16,
            "attn_heads": 2,
            "layers": 1,
            "encoder_layers": 1,
            "ffn_hidden": 32,
            "vision_vocab": 64,
            "text_vocab": 64,
            "max_vision_len": 6,
            "max_text_len": 5,
        },
        "pde": {"model_dim": 16, "heads": 2, "ffn_hidden": 32},
    },
    "loss": {"K": 2},
    "corpus": {
        "concepts": 8,
        "vision_vocab": 64,
        "text_vocab": 64,
        "vision_tokens": 6,
        "text_tokens": 5,
        "synonym_count": 4,
        "train_size": 64,
        "test_size": 32,
    },
    "optim": {"warmup_steps": 2},
    "steps": 3,
    "batch_size": 8,
    "seed": 7,
}


def make_config(overrides=None) -> RunConfig:
    return RunConfig.model_validate(_deep_merge(TINY, overrides or {}))


@pytest.fixture
def tiny_cfg() -> RunConfig:
    return make_config()


@pytest.fixture
def tiny_model(tiny_cfg) -> DistributionVLModel:
    return DistributionVLModel(tiny_cfg.model, tiny_cfg.seed, tiny_cfg.loss.log_tau_init)


@pytest.fixture
def rng() -> SeededRng:
    return SeededRng(1234)


@pytest.fixture
def np_rng() -> np.random.Generator:
    return np.random.default_rng(99)
