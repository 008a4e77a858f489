"""Background file writer: records are queued by the caller thread and written by one listener."""

import logging
from logging.handlers import QueueHandler, QueueListener, TimedRotatingFileHandler
from pathlib import Path
from queue import Queue
from typing import Optional

from .filters import ContextDefaultsFilter
from .formatter import build_formatter, current_log_file

QUEUE_SIZE = 10000
KEEP_DAYS = 7


class LogPipeline:
    """One queue and one rotating file handler per log directory."""

    def __init__(self, log_dir: Path):
        self.log_dir = Path(log_dir)
        self.queue: Queue = Queue(maxsize=QUEUE_SIZE)
        handler = TimedRotatingFileHandler(
            filename=str(current_log_file(self.log_dir)),
            when="midnight",
            backupCount=KEEP_DAYS,
            encoding="utf-8",
        )
        handler.setFormatter(build_formatter())
        handler.addFilter(ContextDefaultsFilter())
        self.listener = QueueListener(self.queue, handler, respect_handler_level=True)
        self.listener.start()

    def handler(self, level: int) -> QueueHandler:
        qh = QueueHandler(self.queue)
        qh.setLevel(level)
        return qh

    def stop(self) -> None:
        """Drain pending records and close the file."""
        self.listener.stop()
        for h in self.listener.handlers:
            h.close()


_pipeline: Optional[LogPipeline] = None


def ensure_queue_listener(log_dir: Path) -> LogPipeline:
    global _pipeline
    if _pipeline is not None and _pipeline.log_dir != Path(log_dir):
        _pipeline.stop()
        _pipeline = None
    if _pipeline is None:
        _pipeline = LogPipeline(log_dir)
    return _pipeline


def stop_queue_listener() -> None:
    global _pipeline
    if _pipeline is not None:
        _pipeline.stop()
        _pipeline = None
