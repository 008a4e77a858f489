import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Union

import pandas as pd

from distvlp.logging import data_logger
from models import EllipseRecord, MetricsRecord, PairedExample


def _dump_line(payload: Dict[str, Any]) -> str:
    return json.dumps(payload, sort_keys=False, separators=(',', ':')) + '\n'


def export_corpus_jsonl(examples: Iterable[PairedExample], file_path: Union[str, Path]) -> int:
    file_path = Path(file_path)
    count = 0
    with open(file_path, 'w', encoding='utf-8', newline='\n') as f:
        for example in examples:
            f.write(_dump_line(example.model_dump(by_alias=True)))
            count += 1
    data_logger.info(
        f"Exported corpus rows: {count}",
        extra={"action": "export_corpus", "status": "success"},
    )
    return count


class MetricsWriter:
    """Appends one MetricsRecord per line and flushes so a crash keeps finished steps."""

    def __init__(self, file_path: Union[str, Path]):
        self.file_path = Path(file_path)
        self._handle = open(self.file_path, 'w', encoding='utf-8', newline='\n')
        self.count = 0

    def write(self, record: MetricsRecord) -> None:
        self._handle.write(_dump_line(record.model_dump()))
        self._handle.flush()
        self.count += 1

    def close(self) -> None:
        if not self._handle.closed:
            self._handle.close()

    def __enter__(self) -> "MetricsWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def export_json(payload: Dict[str, Any], file_path: Union[str, Path]) -> None:
    file_path = Path(file_path)
    with open(file_path, 'w', encoding='utf-8', newline='\n') as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write('\n')
    data_logger.info(
        f"Exported JSON: {file_path.name}",
        extra={"action": "export_json", "status": "success"},
    )


def export_rows_to_csv(rows: List[Dict[str, Any]], columns: List[str], file_path: Union[str, Path]) -> None:
    file_path = Path(file_path)
    df = pd.DataFrame(rows, columns=columns)
    df.to_csv(file_path, index=False, encoding='utf-8', lineterminator='\n')
    data_logger.info(
        f"Exported CSV rows: {len(df)}",
        extra={"action": "export_csv", "status": "success"},
    )


def export_ellipses_csv(records: List[EllipseRecord], file_path: Union[str, Path]) -> None:
    export_rows_to_csv([r.model_dump() for r in records], list(EllipseRecord.model_fields), file_path)
