import json
import struct

import numpy as np
import pytest

from distvlp.harness import (
    FORMAT_VERSION,
    CheckpointError,
    Trainer,
    build_model,
    checkpoint_bytes,
    checkpoint_load,
    checkpoint_metadata,
    checkpoint_save,
    evaluate_retrieval,
)
from distvlp.data import generate_corpus


@pytest.fixture
def trained(tiny_cfg):
    trainer = Trainer(tiny_cfg)
    trainer.run(steps=2)
    return trainer.model


def test_round_trip_is_byte_identical(tmp_path, tiny_cfg, trained):
    first = tmp_path / "a.dvlp"
    checkpoint_save(trained, first, {"step": 2})
    restored = checkpoint_load(build_model(tiny_cfg), first)
    second = tmp_path / "b.dvlp"
    checkpoint_save(restored, second, {"step": 2})
    assert first.read_bytes() == second.read_bytes()
    assert checkpoint_metadata(second) == {"step": 2}


def test_restored_model_evaluates_identically(tmp_path, tiny_cfg, trained):
    path = tmp_path / "ckpt.dvlp"
    checkpoint_save(trained, path)
    restored = checkpoint_load(build_model(tiny_cfg), path)
    test_set = generate_corpus(tiny_cfg.corpus, tiny_cfg.seed, "test")
    a = evaluate_retrieval(trained, test_set, tiny_cfg.loss)
    b = evaluate_retrieval(restored, test_set, tiny_cfg.loss)
    assert a.to_dict() == b.to_dict()
    for (name, p), (_, q) in zip(trained.named_parameters(), restored.named_parameters()):
        np.testing.assert_array_equal(p.adam_v, q.adam_v, err_msg=name)
        assert p.step_count == q.step_count


def test_corrupt_byte_fails_the_checksum(tmp_path, tiny_model):
    data = bytearray(checkpoint_bytes(tiny_model))
    data[-3] ^= 0xFF
    path = tmp_path / "bad.dvlp"
    path.write_bytes(bytes(data))
    with pytest.raises(CheckpointError, match="checksum"):
        checkpoint_load(tiny_model, path)


def test_truncated_file_is_reported(tmp_path, tiny_model):
    path = tmp_path / "short.dvlp"
    path.write_bytes(checkpoint_bytes(tiny_model)[:-16])
    with pytest.raises(CheckpointError, match="truncated"):
        checkpoint_load(tiny_model, path)
    path.write_bytes(b"DVLP")
    with pytest.raises(CheckpointError, match="truncated"):
        checkpoint_load(tiny_model, path)


def test_version_mismatch_names_both_versions(tmp_path, tiny_model):
    data = checkpoint_bytes(tiny_model)
    magic, length = struct.unpack_from("<8sI", data)
    manifest = json.loads(data[12 : 12 + length])
    manifest["version"] = FORMAT_VERSION + 1
    header = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode()
    path = tmp_path / "future.dvlp"
    path.write_bytes(struct.pack("<8sI", magic, len(header)) + header + data[12 + length :])
    with pytest.raises(CheckpointError) as info:
        checkpoint_load(tiny_model, path)
    assert str(FORMAT_VERSION) in str(info.value)
    assert str(FORMAT_VERSION + 1) in str(info.value)


def test_shape_mismatch_is_rejected(tmp_path, tiny_model):
    from conftest import make_config

    path = tmp_path / "ckpt.dvlp"
    checkpoint_save(tiny_model, path)
    wider = build_model(make_config({"model": {"encoder": {"ffn_hidden": 48}, "pde": {"ffn_hidden": 48}}}))
    with pytest.raises(CheckpointError):
        checkpoint_load(wider, path)


def test_missing_file(tmp_path, tiny_model):
    with pytest.raises(CheckpointError, match="not found"):
        checkpoint_load(tiny_model, tmp_path / "nope.dvlp")
