from .core import Config


config = Config()

__all__ = ["Config", "config"]


