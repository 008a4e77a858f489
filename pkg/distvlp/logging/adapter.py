import logging

from .filters import CONTEXT_KEYS


class ContextLoggerAdapter(logging.LoggerAdapter):
    """Adapter that merges bound context with per-call ``extra`` values.

    Keys bound at construction (for example ``run_id``) survive every call;
    ``None`` values passed per call never overwrite them.
    """

    def process(self, msg, kwargs):
        extra = {key: "-" for key in CONTEXT_KEYS}
        extra.update(self.extra or {})
        provided = kwargs.get("extra") or {}
        extra.update({k: v for k, v in provided.items() if v is not None})
        kwargs["extra"] = extra
        return msg, kwargs

