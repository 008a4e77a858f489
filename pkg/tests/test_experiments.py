"""End-to-end experiments on the toy preset; minutes each on a CPU."""

import numpy as np
import pytest
from scipy import stats

from config.core import _deep_merge
from distvlp.data import generate_corpus
from distvlp.engine import SeededRng
from distvlp.harness import Trainer, build_model, chance_bounds, evaluate_retrieval, tukey_hsd
from models import PRESETS, RunConfig

pytestmark = pytest.mark.slow


# Toy corpus and step count, on a one-layer trunk with two samples per distribution.
LIGHT = {"model": {"encoder": {"layers": 1, "encoder_layers": 1}}, "loss": {"K": 2}}


def toy_config(overrides=None) -> RunConfig:
    return RunConfig.model_validate(_deep_merge(_deep_merge(PRESETS["toy"], LIGHT), overrides or {}))


def test_entropy_floor_prevents_variance_collapse():
    collapsed = Trainer(toy_config({"loss": {"alpha": 0.0}, "batch_size": 16})).run()
    floored_cfg = toy_config({"loss": {"alpha": 0.01}, "batch_size": 16})
    floored = Trainer(floored_cfg).run()
    gamma = floored_cfg.loss.resolved_gamma(floored_cfg.model.encoder.model_dim)

    assert collapsed[-1].mean_entropy <= floored[-1].mean_entropy - 2.0
    assert floored[-1].mean_entropy >= gamma - 1.0

    # Entropy under alpha = 0 trends down across the run.
    entropies = np.array([r.mean_entropy for r in collapsed])
    windows = entropies[: len(entropies) // 100 * 100].reshape(-1, 100).mean(axis=1)
    rho, _ = stats.spearmanr(np.arange(len(windows)), windows)
    assert rho < -0.5
    assert windows[-1] < windows[0]


def test_pretraining_makes_retrieval_learnable():
    cfg = toy_config()
    test_set = generate_corpus(cfg.corpus, cfg.corpus_seed, "test")

    untrained = evaluate_retrieval(build_model(cfg), test_set, cfg.loss)
    low, high = chance_bounds(len(test_set), len(test_set))
    assert low <= untrained.i2t["r@1"] <= high
    assert low <= untrained.t2i["r@1"] <= high

    trainer = Trainer(cfg)
    trainer.run()
    trained = evaluate_retrieval(trainer.model, test_set, cfg.loss)
    chance = 1.0 / len(test_set)
    assert trained.i2t["r@1"] >= 10 * chance
    assert trained.t2i["r@1"] >= 10 * chance


def test_hsd_false_positive_rate_is_calibrated():
    data = np.random.default_rng(2024)
    rng = SeededRng(11)
    rejections = 0
    for rep in range(500):
        scores = data.normal(size=(2, 50))
        (pair,) = tukey_hsd(scores, 1000, rng.child(rep))
        rejections += pair.p_value < 0.05
    assert rejections / 500 == pytest.approx(0.05, abs=0.02)
