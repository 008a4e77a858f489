"""Distribution-based vision-language pretraining workbench."""

__version__ = "0.1.0"
