"""Single-file checkpoints: magic, manifest length, JSON manifest, float64 payload.

Every parameter contributes three blobs (value, first and second Adam moment),
each with its own CRC32. The manifest is serialized with sorted keys so a
save → load → save round trip reproduces the file byte for byte.
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from distvlp.exceptions import DistVlpError
from distvlp.logging import train_logger
from distvlp.nn import DistributionVLModel

MAGIC = b"DVLPCKPT"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sI")
_BLOBS = ("value", "adam_m", "adam_v")


class CheckpointError(DistVlpError):
    error_type = "invalid_checkpoint"


def _encode(array: np.ndarray) -> bytes:
    return np.ascontiguousarray(array, dtype="<f8").tobytes()


def checkpoint_bytes(model: DistributionVLModel, metadata: Optional[Dict[str, Any]] = None) -> bytes:
    entries: List[Dict[str, Any]] = []
    chunks: List[bytes] = []
    offset = 0
    for name, param in model.named_parameters():
        for blob, array in zip(_BLOBS, (param.data, param.adam_m, param.adam_v)):
            raw = _encode(array)
            entries.append(
                {
                    "name": name,
                    "blob": blob,
                    "shape": list(array.shape),
                    "offset": offset,
                    "nbytes": len(raw),
                    "crc32": zlib.crc32(raw),
                    "step_count": param.step_count,
                }
            )
            chunks.append(raw)
            offset += len(raw)
    manifest = {"version": FORMAT_VERSION, "entries": entries, "metadata": metadata or {}}
    header = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return _HEADER.pack(MAGIC, len(header)) + header + b"".join(chunks)


def checkpoint_save(model: DistributionVLModel, path: Union[str, Path], metadata: Optional[Dict[str, Any]] = None) -> None:
    path = Path(path)
    data = checkpoint_bytes(model, metadata)
    path.write_bytes(data)
    train_logger.info(
        f"Saved checkpoint {path.name} ({len(data)} bytes)",
        extra={"action": "checkpoint_save", "status": "success"},
    )


def read_manifest(path: Union[str, Path]) -> Tuple[Dict[str, Any], memoryview]:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise CheckpointError(f"{path.name}: truncated header ({len(data)} bytes)")
    magic, length = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError(f"{path.name}: not a checkpoint (bad magic {magic!r})")
    if len(data) < _HEADER.size + length:
        raise CheckpointError(f"{path.name}: truncated manifest")
    try:
        manifest = json.loads(data[_HEADER.size : _HEADER.size + length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{path.name}: unreadable manifest ({e})") from e
    version = manifest.get("version")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path.name}: checkpoint format version {version} but this build reads version {FORMAT_VERSION}")
    return manifest, memoryview(data)[_HEADER.size + length :]


def checkpoint_metadata(path: Union[str, Path]) -> Dict[str, Any]:
    return read_manifest(path)[0].get("metadata", {})


def checkpoint_load(model: DistributionVLModel, path: Union[str, Path]) -> DistributionVLModel:
    """Fill ``model`` in place; every parameter must be present with its shape."""
    manifest, payload = read_manifest(path)
    params = dict(model.named_parameters())
    blobs: Dict[Tuple[str, str], np.ndarray] = {}
    counts: Dict[str, int] = {}
    for entry in manifest["entries"]:
        start, size = entry["offset"], entry["nbytes"]
        if start + size > len(payload):
            raise CheckpointError(f"{Path(path).name}: truncated payload at {entry['name']}.{entry['blob']}")
        raw = payload[start : start + size]
        if zlib.crc32(raw) != entry["crc32"]:
            raise CheckpointError(f"{Path(path).name}: checksum mismatch in {entry['name']}.{entry['blob']}")
        blobs[(entry["name"], entry["blob"])] = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(entry["shape"])
        counts[entry["name"]] = entry["step_count"]

    missing = sorted(set(params) - set(counts))
    extra = sorted(set(counts) - set(params))
    if missing or extra:
        raise CheckpointError(f"checkpoint does not fit the model: missing {missing[:3]}, unexpected {extra[:3]}")
    for name, param in params.items():
        value = blobs[(name, "value")]
        if value.shape != param.shape:
            raise CheckpointError(f"{name}: checkpoint shape {value.shape} but model expects {param.shape}")
        param.data = value.copy()
        param.adam_m = blobs[(name, "adam_m")].copy()
        param.adam_v = blobs[(name, "adam_v")].copy()
        param.step_count = counts[name]
    return model
