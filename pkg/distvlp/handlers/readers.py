import json
from pathlib import Path
from typing import Any, Dict, List, Union

import pandas as pd
import yaml
from pydantic import ValidationError

from distvlp.data.corpus import CorpusError
from distvlp.exceptions import ConfigError, StatisticsError
from distvlp.logging import data_logger
from models import MetricsRecord, PairedExample


def read_corpus_jsonl(file_path: Union[str, Path]) -> List[PairedExample]:
    """One ``{"concept", "vision", "text"}`` object per line; blank lines skipped."""
    file_path = Path(file_path)
    if not file_path.exists():
        raise CorpusError(f"Corpus file not found: {file_path}")
    examples: List[PairedExample] = []
    with open(file_path, 'r', encoding='utf-8') as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                examples.append(PairedExample.model_validate(json.loads(line)))
            except (json.JSONDecodeError, ValidationError) as e:
                raise CorpusError(f"{file_path}:{line_no}: invalid example ({e.__class__.__name__})") from e
    if not examples:
        raise CorpusError(f"Corpus file is empty: {file_path}")
    data_logger.info(
        f"Loaded {len(examples)} examples from {file_path.name}",
        extra={"action": "read_corpus", "status": "success"},
    )
    return examples


def read_config_file(file_path: Union[str, Path]) -> Dict[str, Any]:
    """JSON or YAML mapping; JSON parses as YAML so one loader covers both."""
    file_path = Path(file_path)
    if not file_path.exists():
        raise ConfigError(f"Config file not found: {file_path}")
    try:
        with open(file_path, 'r', encoding='utf-8') as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError(f"Config file {file_path} is not valid JSON/YAML: {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {file_path} must hold a mapping, got {type(data).__name__}")
    return data


def read_scores_csv(file_path: Union[str, Path]) -> pd.DataFrame:
    """First column is the item id, every other column one system's scores."""
    file_path = Path(file_path)
    if not file_path.exists():
        raise StatisticsError(f"Scores file not found: {file_path}")
    df = pd.read_csv(file_path, encoding='utf-8-sig')
    if df.shape[1] < 3:
        raise StatisticsError(f"{file_path} needs an id column and at least two system columns")
    df = df.set_index(df.columns[0])
    try:
        return df.apply(pd.to_numeric, errors='raise')
    except ValueError as e:
        raise StatisticsError(f"{file_path} holds non-numeric scores: {e}") from e


def read_metrics_jsonl(file_path: Union[str, Path]) -> List[MetricsRecord]:
    with open(file_path, 'r', encoding='utf-8') as f:
        return [MetricsRecord.model_validate_json(line) for line in f if line.strip()]
