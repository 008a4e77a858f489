from .filters import CONTEXT_KEYS, ContextDefaultsFilter
from .formatter import JSONFormatter, build_formatter, current_log_file
from .queueing import LogPipeline, ensure_queue_listener, stop_queue_listener
from .adapter import ContextLoggerAdapter
from .core import setup_root_logging, get_logger


train_logger = get_logger("train")
eval_logger = get_logger("eval")
data_logger = get_logger("data")
stats_logger = get_logger("stats")
cli_logger = get_logger("cli")

__all__ = [
    "CONTEXT_KEYS",
    "ContextDefaultsFilter",
    "JSONFormatter",
    "build_formatter",
    "current_log_file",
    "LogPipeline",
    "ensure_queue_listener",
    "stop_queue_listener",
    "ContextLoggerAdapter",
    "setup_root_logging",
    "get_logger",
    "train_logger",
    "eval_logger",
    "data_logger",
    "stats_logger",
    "cli_logger",
]
