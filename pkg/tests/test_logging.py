import json
import logging

import numpy as np

from distvlp.logging import ContextDefaultsFilter, LogPipeline, build_formatter, get_logger


class Capture(logging.Handler):
    def __init__(self):
        super().__init__()
        self.lines = []
        self.setFormatter(build_formatter())
        self.addFilter(ContextDefaultsFilter())

    def emit(self, record):
        self.lines.append(json.loads(self.format(record)))


def capture(name):
    handler = Capture()
    base = logging.getLogger(f"distvlp.{name}")
    base.addHandler(handler)
    base.setLevel(logging.DEBUG)
    return handler, base


def test_bound_context_and_extras_reach_the_json_line():
    handler, base = capture("test_context")
    try:
        logger = get_logger("test_context", {"run_id": "abc"})
        logger.info("step done", extra={"step": 4, "action": "train_step", "loss_total": np.float64(1.5), "status": None})
    finally:
        base.removeHandler(handler)
    (line,) = handler.lines
    assert line["message"] == "step done"
    assert line["run_id"] == "abc"
    assert line["step"] == 4
    assert line["status"] == "-"
    assert line["loss_total"] == 1.5
    assert line["logger"] == "distvlp.test_context"


def test_missing_context_defaults_to_dash():
    handler, base = capture("test_defaults")
    try:
        base.warning("plain", extra={"shape": np.zeros((2, 3))})
    finally:
        base.removeHandler(handler)
    (line,) = handler.lines
    assert line["run_id"] == line["step"] == line["action"] == "-"
    assert line["shape"] == [[0.0] * 3] * 2


def test_pipeline_writes_daily_file(tmp_path):
    pipeline = LogPipeline(tmp_path)
    base = logging.getLogger("distvlp.test_pipeline")
    handler = pipeline.handler(logging.INFO)
    base.addHandler(handler)
    try:
        get_logger("test_pipeline", {"run_id": "r1"}).info("hello", extra={"action": "probe"})
    finally:
        base.removeHandler(handler)
        pipeline.stop()
    (log_file,) = list(tmp_path.glob("distvlp_*.log"))
    record = json.loads(log_file.read_text().splitlines()[-1])
    assert record["run_id"] == "r1"
    assert record["action"] == "probe"
