import itertools

import numpy as np
import pytest
from scipy.special import log_softmax, softmax

from distvlp.engine import SeededRng, Tensor, ops
from distvlp.gaussian import DiagGaussianSeq
from distvlp.objectives import (
    ObjectiveError,
    build_itm_pairs,
    contrastive_from_similarities,
    ditm_loss,
    dmlm_loss,
    dmlm_predict,
    dvlc_loss,
    similarity,
)
from models import LossConfig

LOSS = LossConfig()


def seq(mu, log_sigma=None):
    mu = np.asarray(mu, dtype=float)
    return DiagGaussianSeq(Tensor(mu), Tensor(np.zeros_like(mu) if log_sigma is None else log_sigma))


def brute_force_infonce(sim, tau):
    logits = sim / tau
    n = len(sim)
    rows = -np.mean(log_softmax(logits, axis=1)[np.arange(n), np.arange(n)])
    cols = -np.mean(log_softmax(logits, axis=0)[np.arange(n), np.arange(n)])
    return rows + cols


def test_similarity_of_identical_distributions_is_b():
    g = seq([1.0, 2.0, 3.0])
    assert similarity(g, g, LOSS).item() == pytest.approx(6.0)


def test_similarity_is_affine_in_distance():
    assert similarity(seq([0.0, 0.0]), seq([10.0, 10.0]), LOSS).item() == pytest.approx(5.0)


def test_closer_pairs_score_higher():
    rng = np.random.default_rng(0)
    for _ in range(200):
        anchor, x, y = (seq(rng.normal(size=4), rng.normal(size=4)) for _ in range(3))
        a = -rng.uniform(0.001, 1.0)
        cfg = LossConfig(a=a, b=rng.normal())
        dx = ops.sum(ops.square(ops.sub(anchor.mu, x.mu))).item() + ops.sum(ops.square(ops.sub(anchor.sigma(), x.sigma()))).item()
        dy = ops.sum(ops.square(ops.sub(anchor.mu, y.mu))).item() + ops.sum(ops.square(ops.sub(anchor.sigma(), y.sigma()))).item()
        if abs(dx - dy) < 1e-9:
            continue
        closer_scores_higher = (similarity(anchor, x, cfg).item() > similarity(anchor, y, cfg).item()) == (dx < dy)
        assert closer_scores_higher


def test_contrastive_needs_two_pairs():
    with pytest.raises(ObjectiveError):
        dvlc_loss(seq([[0.0, 1.0]]), seq([[0.0, 1.0]]), Tensor(np.array(0.0)), LOSS)


def test_uniform_similarities_give_two_log_two():
    loss = contrastive_from_similarities(Tensor(np.full((2, 2), 3.0)), Tensor(np.array(np.log(0.07))))
    assert loss.item() == pytest.approx(2 * np.log(2))


def test_contrastive_matches_brute_force():
    rng = np.random.default_rng(1)
    vision, text = seq(rng.normal(size=(4, 5)), rng.normal(size=(4, 5)) * 0.3), seq(rng.normal(size=(4, 5)), rng.normal(size=(4, 5)) * 0.3)
    tau = 0.05
    loss = dvlc_loss(vision, text, Tensor(np.array(np.log(tau))), LOSS).item()
    dist = np.array(
        [
            [np.sum((vision.mu.data[i] - text.mu.data[j]) ** 2) + np.sum((vision.sigma().data[i] - text.sigma().data[j]) ** 2) for j in range(4)]
            for i in range(4)
        ]
    )
    assert loss == pytest.approx(brute_force_infonce(LOSS.a * dist + LOSS.b, tau), rel=1e-12)


def test_joint_rescaling_leaves_contrastive_loss_unchanged():
    rng = np.random.default_rng(2)
    vision, text = seq(rng.normal(size=(3, 4))), seq(rng.normal(size=(3, 4)))
    base = dvlc_loss(vision, text, Tensor(np.array(np.log(0.07))), LOSS).item()
    c = 3.5
    scaled_cfg = LossConfig(a=c * LOSS.a, b=c * LOSS.b)
    scaled = dvlc_loss(vision, text, Tensor(np.array(np.log(c * 0.07))), scaled_cfg).item()
    assert scaled == pytest.approx(base, rel=1e-10)


def test_diagonal_dominant_assignment_minimizes_contrastive_loss():
    table = np.array([[2.0, 0.5, 0.1], [0.3, 1.5, 0.2], [0.4, 0.1, 1.8]])
    log_tau = Tensor(np.array(0.0))
    losses = {
        perm: contrastive_from_similarities(Tensor(table[:, list(perm)]), log_tau).item()
        for perm in itertools.permutations(range(3))
    }
    assert min(losses, key=losses.get) == (0, 1, 2)


def _masked_fixture(seed=3, vocab=6):
    rng = np.random.default_rng(seed)
    text = seq(rng.normal(size=(2, 4, 3)), rng.normal(size=(2, 4, 3)) * 0.3)
    labels = np.array([[-1, 2, -1, -1], [5, -1, 0, 1]])
    W = rng.normal(size=(3, vocab))
    return text, labels, W


def test_dmlm_without_samples_is_plain_weighted_cross_entropy():
    text, labels, W = _masked_fixture()
    loss = dmlm_loss(text, labels, lambda z: ops.matmul(z, W), 0, None).item()
    logp = log_softmax(text.mu.data @ W, axis=-1)
    first = -logp[0, 1, 2]
    second = -np.mean([logp[1, 0, 5], logp[1, 2, 0], logp[1, 3, 1]])
    assert loss == pytest.approx((first + second) / 2, rel=1e-12)


def test_dmlm_with_samples_matches_hand_unrolled_average():
    text, labels, W = _masked_fixture()
    rng = SeededRng(21)
    loss = dmlm_loss(text, labels, lambda z: ops.matmul(z, W), 2, rng).item()

    index = np.nonzero(labels != -1)
    mu, sigma = text.mu.data[index], text.sigma().data[index]
    targets = labels[index]
    weights = np.array([1.0, 1 / 3, 1 / 3, 1 / 3]) / 2
    members = [mu] + [mu + sigma * rng.child(s).normal(mu.shape) for s in (1, 2)]
    terms = [-np.sum(weights * log_softmax(z @ W, axis=-1)[np.arange(4), targets]) for z in members]
    assert loss == pytest.approx(np.mean(terms), rel=1e-12)


def test_dmlm_perfect_classifier_has_zero_loss():
    text, labels, _ = _masked_fixture()
    targets = labels[np.nonzero(labels != -1)]
    point_mass = 100.0 * np.eye(6)[targets]
    # the mean and every sample arrive as one member-major row block
    classifier = lambda z: Tensor(np.tile(point_mass, (z.shape[0] // len(targets), 1)))
    assert dmlm_loss(text, labels, classifier, 3, SeededRng(0)).item() <= 1e-6


def test_dmlm_needs_a_masked_position():
    text, _, W = _masked_fixture()
    with pytest.raises(ObjectiveError):
        dmlm_loss(text, np.full((2, 4), -1), lambda z: ops.matmul(z, W), 0, None)


def test_dmlm_predict_degenerate_cases():
    rng = np.random.default_rng(4)
    W = rng.normal(size=(3, 5))
    mu = rng.normal(size=3)
    classifier = lambda z: ops.matmul(ops.reshape(z, (1, 3)), W)
    expected = softmax(mu.reshape(1, 3) @ W, axis=-1)[0]

    plain = dmlm_predict(seq(mu), classifier, 0, None)
    np.testing.assert_array_equal(plain.probabilities[0], expected)

    collapsed = dmlm_predict(seq(mu, np.full(3, -20.0)), classifier, 5, SeededRng(1))
    np.testing.assert_allclose(collapsed.probabilities[0], expected, atol=1e-6)


def test_dmlm_predict_pools_independent_members():
    rng = np.random.default_rng(5)
    W = rng.normal(size=(3, 5))
    mu, log_sigma = rng.normal(size=3), rng.normal(size=3) * 0.5
    classifier = lambda z: ops.matmul(ops.reshape(z, (1, 3)), W)
    sampler = SeededRng(8)
    pred = dmlm_predict(seq(mu, log_sigma), classifier, 5, sampler)
    members = [softmax(mu @ W)] + [
        softmax((mu + np.exp(log_sigma) * sampler.child(s).normal((3,))) @ W) for s in range(1, 6)
    ]
    np.testing.assert_allclose(pred.probabilities[0], np.mean(members, axis=0), atol=1e-12)
    assert pred.samples.shape == (6, 1, 5)
    assert pred.probabilities.sum() == pytest.approx(1.0, abs=1e-9)


def _itm_fixture(seed=6):
    rng = np.random.default_rng(seed)
    vision = seq(rng.normal(size=(4, 3)), rng.normal(size=(4, 3)) * 0.3)
    text = seq(rng.normal(size=(4, 3)), rng.normal(size=(4, 3)) * 0.3)
    return vision, text, np.array([1, 0, 1, 0])


def test_ditm_uninformative_classifier_gives_log_two():
    vision, text, labels = _itm_fixture()
    flat = lambda z: ops.scale(ops.matmul(z, np.zeros((6, 2))), 1.0)
    assert ditm_loss(vision, text, labels, flat, 3, SeededRng(0)).item() == pytest.approx(np.log(2))


def test_ditm_perfect_classifier():
    vision, text, labels = _itm_fixture()
    point_mass = Tensor(100.0 * np.eye(2)[labels])
    assert ditm_loss(vision, text, labels, lambda z: point_mass, 0, None).item() <= 1e-6


def test_ditm_single_sample_matches_two_term_average():
    vision, text, labels = _itm_fixture()
    W = np.random.default_rng(7).normal(size=(6, 2))
    rng = SeededRng(9)
    loss = ditm_loss(vision, text, labels, lambda z: ops.matmul(z, W), 1, rng).item()

    def ce(features):
        return -np.mean(log_softmax(features @ W, axis=-1)[np.arange(4), labels])

    v1 = vision.mu.data + vision.sigma().data * rng.child(0).child(1).normal((4, 3))
    w1 = text.mu.data + text.sigma().data * rng.child(1).child(1).normal((4, 3))
    expected = 0.5 * (ce(np.hstack([vision.mu.data, text.mu.data])) + ce(np.hstack([v1, w1])))
    assert loss == pytest.approx(expected, rel=1e-12)


def test_ditm_rejects_single_class_batch():
    vision, text, _ = _itm_fixture()
    with pytest.raises(ObjectiveError):
        ditm_loss(vision, text, np.ones(4, dtype=int), lambda z: ops.matmul(z, np.zeros((6, 2))), 0, None)


def test_matching_pairs_swap_exactly_one_side():
    vision_index, text_index, labels = build_itm_pairs(9, SeededRng(3))
    assert labels.sum() == 5
    for row in range(9):
        swapped = (vision_index[row] != row) + (text_index[row] != row)
        assert swapped == (1 - labels[row])
