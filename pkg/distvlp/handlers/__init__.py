from .readers import read_config_file, read_corpus_jsonl, read_metrics_jsonl, read_scores_csv
from .writers import (
    MetricsWriter,
    export_corpus_jsonl,
    export_ellipses_csv,
    export_json,
    export_rows_to_csv,
)

__all__ = [
    "read_config_file",
    "read_corpus_jsonl",
    "read_scores_csv",
    "read_metrics_jsonl",
    "MetricsWriter",
    "export_corpus_jsonl",
    "export_ellipses_csv",
    "export_json",
    "export_rows_to_csv",
]
