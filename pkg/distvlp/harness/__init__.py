from .checkpoint import (
    FORMAT_VERSION,
    CheckpointError,
    checkpoint_bytes,
    checkpoint_load,
    checkpoint_metadata,
    checkpoint_save,
)
from .training import NonFiniteLossError, Trainer, TrainingResult, build_model, stored_run_config, train_run
from .retrieval import (
    PER_QUERY_COLUMNS,
    RetrievalReport,
    chance_bounds,
    encode_cls,
    evaluate_retrieval,
    recall_at_k,
    similarity_matrix,
    true_partner_ranks,
)
from .ellipses import AXIS_SCALE, ellipse_records, export_ellipses_svg, train_viz_head
from .hsd import HSD_COLUMNS, UNDEFINED, PairComparison, hsd_from_frame, residual_variance, tukey_hsd

__all__ = [
    "FORMAT_VERSION",
    "CheckpointError",
    "checkpoint_bytes",
    "checkpoint_save",
    "checkpoint_load",
    "checkpoint_metadata",
    "NonFiniteLossError",
    "Trainer",
    "TrainingResult",
    "build_model",
    "stored_run_config",
    "train_run",
    "PER_QUERY_COLUMNS",
    "RetrievalReport",
    "chance_bounds",
    "encode_cls",
    "evaluate_retrieval",
    "recall_at_k",
    "similarity_matrix",
    "true_partner_ranks",
    "AXIS_SCALE",
    "ellipse_records",
    "export_ellipses_svg",
    "train_viz_head",
    "HSD_COLUMNS",
    "UNDEFINED",
    "PairComparison",
    "hsd_from_frame",
    "residual_variance",
    "tukey_hsd",
]
