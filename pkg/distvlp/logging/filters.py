import logging

import numpy as np

CONTEXT_KEYS = ("run_id", "step", "action", "status")


def _plain(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist() if value.size <= 16 else f"ndarray{value.shape}"
    return value


class ContextDefaultsFilter(logging.Filter):
    """Fill missing context keys with ``-`` and turn numpy values into JSON-ready ones."""

    def filter(self, record: logging.LogRecord) -> bool:
        for key in CONTEXT_KEYS:
            if not hasattr(record, key):
                setattr(record, key, "-")
        for key, value in list(record.__dict__.items()):
            if isinstance(value, (np.generic, np.ndarray)):
                setattr(record, key, _plain(value))
        return True
