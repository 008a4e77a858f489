import numpy as np
import pytest

from distvlp.data import generate_corpus, stack_examples
from distvlp.engine import SeededRng, ops
from distvlp.engine.optim import lr_schedule
from distvlp.harness import Trainer, build_model
from distvlp.nn import build_optimizer
from distvlp.objectives import ObjectiveError, compute_losses, pretrain_step

from conftest import make_config


def first_batch(cfg, size=None):
    examples = generate_corpus(cfg.corpus, cfg.corpus_seed, "train")
    return stack_examples(examples, list(range(size or cfg.batch_size)))


def one_step(cfg):
    model = build_model(cfg)
    optimizer = build_optimizer(model, cfg.optim)
    record = pretrain_step(first_batch(cfg), model, optimizer, cfg, SeededRng(cfg.seed), 1)
    return record, model


def test_total_matches_its_terms(tiny_cfg):
    record, _ = one_step(tiny_cfg)
    assert record.bookkeeping_gap(tiny_cfg.loss.alpha) <= 1e-9
    assert record.loss_reg >= 0
    assert record.mean_entropy != 0
    assert record.tau == pytest.approx(0.07)


def test_steps_are_deterministic(tiny_cfg):
    first, model_a = one_step(tiny_cfg)
    second, model_b = one_step(tiny_cfg)
    assert first == second
    for (name, a), (_, b) in zip(model_a.named_parameters(), model_b.named_parameters()):
        np.testing.assert_array_equal(a.data, b.data, err_msg=name)


def test_zero_alpha_leaves_the_regularizer_out_of_the_update():
    cfg = make_config({"loss": {"alpha": 0.0, "gamma": 100.0}})
    record, stepped = one_step(cfg)
    assert record.loss_reg > 0

    # Same step with the regularizer never computed at all.
    model = build_model(cfg)
    optimizer = build_optimizer(model, cfg.optim)
    losses = compute_losses(first_batch(cfg), model, cfg, SeededRng(cfg.seed), 1)
    optimizer.zero_grad()
    ops.add_n([losses.dmlm, losses.ditm, losses.dvlc]).backward()
    optimizer.step(lr_schedule(1, cfg.steps, cfg.optim.warmup_steps, 1.0))

    for (name, a), (_, b) in zip(stepped.named_parameters(), model.named_parameters()):
        np.testing.assert_array_equal(a.data, b.data, err_msg=name)


def test_point_mode_has_no_distribution_terms():
    cfg = make_config({"model": {"use_pde": False}})
    record, model = one_step(cfg)
    assert not model.use_pde
    assert record.loss_reg == 0
    assert record.mean_entropy == 0
    assert np.isfinite(record.loss_total)


def test_batch_of_one_is_rejected(tiny_cfg):
    model = build_model(tiny_cfg)
    optimizer = build_optimizer(model, tiny_cfg.optim)
    with pytest.raises(ObjectiveError):
        pretrain_step(first_batch(tiny_cfg, 1), model, optimizer, tiny_cfg, SeededRng(0), 1)


def test_trainer_emits_one_record_per_step(tiny_cfg):
    records = Trainer(tiny_cfg).run()
    assert [r.step for r in records] == [1, 2, 3]
    assert all(r.bookkeeping_gap(tiny_cfg.loss.alpha) <= 1e-9 for r in records)


def test_recorded_total_is_the_backpropagated_objective_for_a_hundred_steps():
    cfg = make_config({"steps": 100, "loss": {"alpha": 0.5}})
    records = Trainer(cfg).run()
    assert len(records) == 100
    for record in records:
        assert record.bookkeeping_gap(cfg.loss.alpha) <= 1e-9, record.step


def test_recorded_total_leaves_out_the_detached_regularizer():
    cfg = make_config({"loss": {"alpha": 0.0, "gamma": 100.0}})
    record, _ = one_step(cfg)
    assert record.loss_reg > 0
    assert record.loss_total == pytest.approx(record.loss_dmlm + record.loss_ditm + record.loss_dvlc, abs=1e-12)


def test_viz_head_is_not_trained_during_pretraining(tiny_cfg):
    trainer = Trainer(tiny_cfg)
    before = {name: p.data.copy() for name, p in trainer.model.named_viz_parameters()}
    trainer.run(steps=2)
    for name, p in trainer.model.named_viz_parameters():
        np.testing.assert_array_equal(p.data, before[name])
