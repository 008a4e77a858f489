"""Named starting points for run configs.

``toy`` is sized for minutes-scale CPU runs. ``full`` carries the full-scale
constants (768-wide features, 12 attention heads, 6 cross-modal layers, PDE
with 6 heads, K = 5, a = -0.005, b = 6, alpha = 0.01, gamma = 300).
"""

from typing import Any, Dict

PRESETS: Dict[str, Dict[str, Any]] = {
    "toy": {
        "preset": "toy",
        "model": {
            "encoder": {"model_dim": 64, "attn_heads": 4, "layers": 2, "encoder_layers": 2, "ffn_hidden": 128},
            "pde": {"model_dim": 64, "heads": 2, "act": "softmax", "ffn_hidden": 128},
        },
        "loss": {"a": -0.005, "b": 6.0, "alpha": 0.01, "gamma": None, "K": 5},
        "steps": 2000,
        "batch_size": 32,
    },
    "full": {
        "preset": "full",
        "model": {
            "encoder": {
                "model_dim": 768,
                "attn_heads": 12,
                "layers": 6,
                "encoder_layers": 2,
                "ffn_hidden": 3072,
                "max_text_len": 50,
            },
            "pde": {"model_dim": 768, "heads": 6, "act": "softmax", "ffn_hidden": 3072},
        },
        "loss": {"a": -0.005, "b": 6.0, "alpha": 0.01, "gamma": 300.0, "K": 5},
        "optim": {"lr_extractor": 1e-5, "lr_fusion": 5e-5, "lr_pde": 5e-5, "lr_heads": 5e-5, "warmup_steps": 10000},
        "steps": 100000,
        "batch_size": 4096,
        "corpus": {"train_size": 8192},
    },
}
