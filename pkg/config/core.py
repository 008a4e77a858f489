import copy
import os
import yaml

from pathlib import Path
from dotenv import load_dotenv
from typing import Any, Dict, Optional

# Machine-level defaults; experiment settings live in run config files.
DEFAULTS: Dict[str, Any] = {
    "run": {"default_preset": "toy", "output_dir": "runs"},
    "training": {"log_every": 50, "checkpoint_name": "checkpoint.dvlp", "metrics_name": "metrics.jsonl"},
    "evaluation": {"recall_ks": [1, 5, 10], "ellipse_items": 16, "viz_steps": 200},
    "statistics": {"trials": 1000, "chunk_size": 250, "workers": 1},
    "logging": {"level": "INFO", "dir": "logs", "console": False},
}

# Environment variable -> dotted config path. Later entries win.
ENV_OVERRIDES = (
    ("LOG_LEVEL", "logging.level"),
    ("DISTVLP_LOG_LEVEL", "logging.level"),
    ("DISTVLP_LOG_DIR", "logging.dir"),
    ("DISTVLP_OUTPUT_DIR", "run.output_dir"),
)


def _bool_env(value: Optional[str], default: bool = False) -> bool:
    if value is None:
        return default
    return value.strip().lower() in ("true", "1", "yes", "on")


def _deep_merge(a: Dict[str, Any], b: Dict[str, Any]) -> Dict[str, Any]:
    """Recursive merge of ``b`` over ``a``; neither input is modified."""
    merged = dict(a)
    for key, value in (b or {}).items():
        base = merged.get(key)
        merged[key] = _deep_merge(base, value) if isinstance(value, dict) and isinstance(base, dict) else value
    return merged


class Config:
    """Runtime settings: built-in defaults < config.yaml < .env files < environment."""

    def __init__(self, project_root: Optional[Path] = None):
        self._project_root = Path(project_root) if project_root else Path(__file__).resolve().parent.parent
        for name in (".env", ".env.local"):
            env_path = self._project_root / name
            if env_path.exists():
                load_dotenv(env_path, override=True)
        self._data = self._apply_environment(_deep_merge(copy.deepcopy(DEFAULTS), self._read_yaml()))

    def _read_yaml(self) -> Dict[str, Any]:
        path = self._project_root / "config.yaml"
        if not path.exists():
            return {}
        try:
            data = yaml.safe_load(path.read_text(encoding="utf-8"))
        except (OSError, yaml.YAMLError):
            return {}
        return data if isinstance(data, dict) else {}

    @staticmethod
    def _apply_environment(data: Dict[str, Any]) -> Dict[str, Any]:
        for env_name, dotted in ENV_OVERRIDES:
            value = os.getenv(env_name)
            if value:
                section, key = dotted.split(".")
                data.setdefault(section, {})[key] = value
        if os.getenv("DEBUG") is not None and _bool_env(os.getenv("DEBUG")):
            data["logging"]["level"] = "DEBUG"
        return data

    def _get(self, path: str, default: Any = None) -> Any:
        node: Any = self._data
        for part in path.split("."):
            node = node.get(part) if isinstance(node, dict) else None
            if node is None:
                return default
        return node

    @property
    def debug(self) -> bool:
        return self.log_level == "DEBUG"

    @property
    def log_level(self) -> str:
        return str(self._get("logging.level", "INFO")).upper()

    @property
    def log_dir(self) -> Path:
        return Path(self._get("logging.dir", "logs"))

    @property
    def log_to_console(self) -> bool:
        return bool(self._get("logging.console", False)) or self.debug

    @property
    def output_dir(self) -> Path:
        return Path(self._get("run.output_dir", "runs"))

    @property
    def default_preset(self) -> str:
        return str(self._get("run.default_preset", "toy"))

    @property
    def training_settings(self) -> Dict[str, Any]:
        return dict(self._get("training", {}))

    @property
    def evaluation_settings(self) -> Dict[str, Any]:
        return dict(self._get("evaluation", {}))

    @property
    def statistics_settings(self) -> Dict[str, Any]:
        return dict(self._get("statistics", {}))

    @property
    def logging_settings(self) -> Dict[str, Any]:
        return dict(self._get("logging", {}))

    def get_env_info(self) -> dict:
        root = self._project_root
        return {
            "debug_mode": self.debug,
            "log_level": self.log_level,
            "log_dir": str(self.log_dir),
            "output_dir": str(self.output_dir),
            "default_preset": self.default_preset,
            "env_file_exists": (root / ".env").exists(),
            "env_local_file_exists": (root / ".env.local").exists(),
            "yaml_exists": (root / "config.yaml").exists(),
        }
