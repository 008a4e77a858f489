import atexit
import logging
from typing import Any, Dict, Optional

from config import config

from .adapter import ContextLoggerAdapter
from .filters import ContextDefaultsFilter
from .formatter import build_formatter
from .queueing import ensure_queue_listener, stop_queue_listener

ROOT_NAME = "distvlp"


def setup_root_logging() -> None:
    """Route every ``distvlp.*`` logger to the daily JSON file (and console in debug)."""
    if getattr(setup_root_logging, "_initialized", False):
        return

    level = getattr(logging, config.log_level, logging.INFO)
    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    root_logger.handlers.clear()
    root_logger.addHandler(ensure_queue_listener(config.log_dir).handler(level))
    atexit.register(stop_queue_listener)

    if config.log_to_console:
        console = logging.StreamHandler()
        console.setLevel(level)
        console.setFormatter(build_formatter())
        console.addFilter(ContextDefaultsFilter())
        root_logger.addHandler(console)

    setup_root_logging._initialized = True


def get_logger(name: str, context: Optional[Dict[str, Any]] = None) -> ContextLoggerAdapter:
    return ContextLoggerAdapter(logging.getLogger(f"{ROOT_NAME}.{name}"), context or {})
