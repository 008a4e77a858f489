from .losses import (
    MaskedTokenPrediction,
    ObjectiveError,
    build_itm_pairs,
    contrastive_from_similarities,
    ditm_loss,
    dmlm_loss,
    dmlm_predict,
    dvlc_loss,
    similarity,
    similarity_table,
)
from .step import StepLosses, compute_losses, entropy_regularizer, mean_entropy, pretrain_step, sample_count

__all__ = [
    "ObjectiveError",
    "similarity",
    "similarity_table",
    "contrastive_from_similarities",
    "dvlc_loss",
    "dmlm_loss",
    "dmlm_predict",
    "MaskedTokenPrediction",
    "ditm_loss",
    "build_itm_pairs",
    "StepLosses",
    "compute_losses",
    "entropy_regularizer",
    "mean_entropy",
    "pretrain_step",
    "sample_count",
]
