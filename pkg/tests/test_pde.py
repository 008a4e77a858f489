import numpy as np
import pytest
from pydantic import ValidationError

from distvlp.engine import SeededRng, ShapeError, Tensor
from distvlp.nn import ParamFactory, ProbabilityDistributionEncoder, attention_weights, pde_forward
from models import PdeConfig

ACTS = ["softmax", "relu_norm", "relu2_norm", "sigmoid_norm"]


def make_pde(act="softmax", dim=8, heads=2, seed=0, std=0.5):
    cfg = PdeConfig(model_dim=dim, heads=heads, act=act, ffn_hidden=16)
    return ProbabilityDistributionEncoder(ParamFactory(SeededRng(seed), std=std), "pde", cfg)


@pytest.mark.parametrize("act", ACTS + ["mlp_only"])
def test_zero_weights_pass_input_through(act):
    pde = make_pde(act)
    pde.fill_(0.0)
    hidden = np.random.default_rng(0).normal(size=(5, 8))
    g = pde_forward(Tensor(hidden), pde)
    np.testing.assert_array_equal(g.mu.data, hidden)
    np.testing.assert_array_equal(g.log_sigma.data, 0.0)


@pytest.mark.parametrize("act", ACTS)
def test_attention_rows_are_distributions(act):
    rng = np.random.default_rng(1)
    q, k = Tensor(rng.normal(size=(2, 6, 4))), Tensor(rng.normal(size=(2, 6, 4)))
    weights = attention_weights(q, k, act).data
    assert np.all(weights >= 0)
    np.testing.assert_allclose(weights.sum(-1), 1.0, atol=1e-12)


@pytest.mark.parametrize("act", ACTS)
def test_single_token_attends_to_itself(act):
    rng = np.random.default_rng(2)
    weights = attention_weights(Tensor(rng.normal(size=(1, 4))), Tensor(rng.normal(size=(1, 4))), act)
    np.testing.assert_array_equal(weights.data, [[1.0]])


def test_single_token_sequence_forward():
    g = make_pde()(Tensor(np.random.default_rng(3).normal(size=(1, 8))))
    assert g.shape == (1, 8)


def test_mlp_only_tokens_are_independent():
    pde = make_pde("mlp_only")
    hidden = np.random.default_rng(4).normal(size=(4, 8))
    changed = hidden.copy()
    changed[3] += 5.0
    a, b = pde(Tensor(hidden)), pde(Tensor(changed))
    np.testing.assert_array_equal(a.mu.data[:3], b.mu.data[:3])
    np.testing.assert_array_equal(a.log_sigma.data[:3], b.log_sigma.data[:3])


def test_sequence_attention_mixes_tokens():
    pde = make_pde("softmax")
    hidden = np.random.default_rng(5).normal(size=(4, 8))
    changed = hidden.copy()
    changed[3] += np.arange(8.0)
    a, b = pde(Tensor(hidden)), pde(Tensor(changed))
    assert not np.allclose(a.log_sigma.data[0], b.log_sigma.data[0])


def test_batched_forward_matches_per_example():
    pde = make_pde("relu2_norm")
    hidden = np.random.default_rng(6).normal(size=(3, 5, 8))
    batched = pde(Tensor(hidden))
    for i in range(3):
        single = pde(Tensor(hidden[i]))
        np.testing.assert_allclose(batched.mu.data[i], single.mu.data, atol=1e-12)
        np.testing.assert_allclose(batched.log_sigma.data[i], single.log_sigma.data, atol=1e-12)


def test_wrong_feature_width_is_rejected():
    with pytest.raises(ShapeError):
        make_pde()(Tensor(np.zeros((3, 6))))


def test_head_split_must_divide_dimension():
    with pytest.raises(ValidationError):
        PdeConfig(model_dim=10, heads=3)


def test_each_path_runs_every_head():
    pde = make_pde(heads=2)
    events = []
    pde(Tensor(np.random.default_rng(7).normal(size=(3, 8))), probe=lambda kind, payload: events.append(kind))
    assert events == ["pde_attention"] * 4


def test_parameter_shapes_follow_head_split():
    shapes = {name: p.shape for name, p in make_pde(dim=12, heads=3).named_parameters()}
    assert shapes["pde.mu.head0.wqkv.weight"] == (2, 6)
    assert shapes["pde.sigma.head2.wqkv.weight"] == (2, 6)
    assert shapes["pde.mu.wo.weight"] == (6, 12)


def _layer_norm(x, gamma, beta):
    centered = x - x.mean(-1, keepdims=True)
    return centered / np.sqrt((centered ** 2).mean(-1, keepdims=True) + 1e-5) * gamma + beta


def _gelu(x):
    return 0.5 * x * (1.0 + np.tanh(np.sqrt(2.0 / np.pi) * (x + 0.044715 * x ** 3)))


def _weights(scores, act):
    if act == "softmax":
        e = np.exp(scores - scores.max(-1, keepdims=True))
        return e / e.sum(-1, keepdims=True)
    raw = {
        "relu_norm": np.maximum(scores, 0.0),
        "relu2_norm": np.maximum(scores, 0.0) ** 2,
        "sigmoid_norm": 1.0 / (1.0 + np.exp(-scores)),
    }[act]
    totals = raw.sum(-1, keepdims=True)
    return np.where(totals < 1e-6, 1.0 / raw.shape[-1], raw / np.where(totals < 1e-6, 1.0, totals))


def _reference_pde(hidden, p, dim, heads, act):
    """Plain numpy forward pass of the encoder, written without the tape."""
    d_k = dim // (2 * heads)

    def ffn(x, prefix, residual=True):
        h = _layer_norm(x, p[f"{prefix}.norm.gamma"], p[f"{prefix}.norm.beta"])
        out = _gelu(h @ p[f"{prefix}.fc1.weight"] + p[f"{prefix}.fc1.bias"]) @ p[f"{prefix}.fc2.weight"]
        out = out + p[f"{prefix}.fc2.bias"]
        return x + out if residual else out

    normed = _layer_norm(hidden, p["pde.norm.gamma"], p["pde.norm.beta"])
    mixed = {}
    for path, offset in (("mu", 0), ("sigma", dim // 2)):
        outputs = []
        for i in range(heads):
            chunk = normed[:, offset + i * d_k: offset + (i + 1) * d_k]
            qkv = chunk @ p[f"pde.{path}.head{i}.wqkv.weight"]
            q, k, v = qkv[:, :d_k], qkv[:, d_k: 2 * d_k], qkv[:, 2 * d_k:]
            outputs.append(_weights(q @ k.T / np.sqrt(d_k), act) @ v)
        mixed[path] = np.concatenate(outputs, axis=-1) @ p[f"pde.{path}.wo.weight"]
    return ffn(hidden + mixed["mu"], "pde.mu.ffn"), ffn(mixed["sigma"], "pde.sigma.ffn")


@pytest.mark.parametrize("act", ACTS)
def test_forward_matches_plain_numpy_reference(act):
    pde = make_pde(act, dim=8, heads=2)
    rng = np.random.default_rng(11)
    for p in pde.parameters():
        p.data = rng.normal(size=p.shape) * 0.5
    hidden = rng.normal(size=(3, 8))
    g = pde_forward(Tensor(hidden), pde)
    mu, log_sigma = _reference_pde(hidden, {n: p.data for n, p in pde.named_parameters()}, 8, 2, act)
    np.testing.assert_allclose(g.mu.data, mu, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(g.log_sigma.data, log_sigma, rtol=1e-10, atol=1e-12)


def test_sigmoid_norm_matches_row_by_row_recomputation():
    rng = np.random.default_rng(12)
    q, k = rng.normal(size=(3, 4)), rng.normal(size=(3, 4))
    weights = attention_weights(Tensor(q), Tensor(k), "sigmoid_norm").data
    expected = np.zeros((3, 3))
    for i in range(3):
        row = [1.0 / (1.0 + np.exp(-(q[i] @ k[j]) / 2.0)) for j in range(3)]
        expected[i] = np.array(row) / sum(row)
    np.testing.assert_allclose(weights, expected, atol=1e-14)


@pytest.mark.parametrize("act", ACTS + ["mlp_only"])
def test_token_permutation_permutes_outputs(act):
    pde = make_pde(act)
    hidden = np.random.default_rng(13).normal(size=(5, 8))
    order = np.array([3, 0, 4, 2, 1])
    a, b = pde(Tensor(hidden)), pde(Tensor(hidden[order]))
    np.testing.assert_allclose(b.mu.data, a.mu.data[order], atol=1e-12)
    np.testing.assert_allclose(b.log_sigma.data, a.log_sigma.data[order], atol=1e-12)
