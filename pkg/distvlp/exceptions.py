class DistVlpError(Exception):
    """Base class for every error raised by the workbench."""

    error_type = "distvlp_error"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class ConfigError(DistVlpError):
    """Run configuration failed to load or validate."""

    error_type = "invalid_config"


class StatisticsError(DistVlpError):
    """Score table unusable for a significance test."""

    error_type = "invalid_scores"
