import uuid
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd
from pydantic import ValidationError

from config import config as app_config
from config.core import _deep_merge
from distvlp.data import generate_corpus
from distvlp.exceptions import ConfigError, StatisticsError
from distvlp.handlers import read_config_file, read_corpus_jsonl, read_scores_csv
from distvlp.harness import build_model, checkpoint_load, checkpoint_metadata
from distvlp.nn import DistributionVLModel
from models import PRESETS, PairedExample, RunConfig


def new_run_id() -> str:
    return uuid.uuid4().hex[:12]


def _validate(raw: Dict[str, Any], origin: str) -> RunConfig:
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as e:
        problems = "; ".join(f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors())
        raise ConfigError(f"{origin}: {problems}") from e


def apply_overrides(raw: Dict[str, Any], seed: Optional[int], out: Optional[str]) -> Dict[str, Any]:
    raw = dict(raw)
    if seed is not None:
        raw["seed"] = seed
    if out is not None:
        raw["output_dir"] = str(out)
    return raw


def load_run_config(path: Optional[str], seed: Optional[int] = None, out: Optional[str] = None) -> RunConfig:
    """Preset defaults, then the file, then ``--seed`` / ``--out``."""
    raw = read_config_file(path) if path else {}
    preset = raw.get("preset", app_config.default_preset)
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose one of {', '.join(sorted(PRESETS))}")
    merged = _deep_merge(PRESETS[preset], raw)
    return _validate(apply_overrides(merged, seed, out), str(path or f"preset {preset}"))


def resolve_run_config(
    path: Optional[str], seed: Optional[int], out: Optional[str], checkpoint: Optional[str] = None
) -> RunConfig:
    """Without ``--config`` an evaluation command reuses the settings stored in the checkpoint."""
    if path is None and checkpoint is not None:
        stored = checkpoint_metadata(checkpoint).get("run_config")
        if stored:
            return _validate(apply_overrides(stored, seed, out), f"{checkpoint} (stored run config)")
    return load_run_config(path, seed, out)


def output_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir) if cfg.output_dir else app_config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    return out


def load_model(cfg: RunConfig, checkpoint: str) -> DistributionVLModel:
    return checkpoint_load(build_model(cfg), checkpoint)


def load_eval_corpus(cfg: RunConfig, corpus: Optional[str]) -> List[PairedExample]:
    if corpus:
        return read_corpus_jsonl(corpus)
    return generate_corpus(cfg.corpus, cfg.corpus_seed, "test")


def load_hsd_scores(inputs: Sequence[str], metric: str) -> pd.DataFrame:
    """One scores CSV as is, or one ``metric`` column from each per-query CSV."""
    if len(inputs) == 1:
        return read_scores_csv(inputs[0])
    columns = {}
    for i, path in enumerate(inputs):
        frame = read_scores_csv(path)
        if metric not in frame.columns:
            raise StatisticsError(f"{path} has no column {metric!r}")
        name = Path(path).parent.name or Path(path).stem
        if name in columns:
            name = f"{name}_{i}"
        columns[name] = frame[metric]
    merged = pd.concat(columns, axis=1, join="outer")
    if merged.isna().any().any():
        raise StatisticsError("score files do not cover the same items")
    return merged
