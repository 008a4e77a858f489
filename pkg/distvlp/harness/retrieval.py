"""Recall@K retrieval with the unimodal [CLS] distributions.

Candidates are ranked by ``a·W₂² + b`` (higher is closer). Ties keep
candidate order because the argsort is stable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from distvlp.data import stack_examples
from distvlp.engine.tensor import no_grad
from distvlp.gaussian import pairwise_w2_numpy
from distvlp.nn import DistributionVLModel
from distvlp.objectives import ObjectiveError
from models import LossConfig, PairedExample

PER_QUERY_COLUMNS = ["query", "concept", "i2t_rr", "i2t_hit1", "t2i_rr", "t2i_hit1"]


@dataclass
class ClsFeatures:
    vision_mu: np.ndarray
    vision_sigma: np.ndarray
    text_mu: np.ndarray
    text_sigma: np.ndarray


def encode_cls(model: DistributionVLModel, examples: Sequence[PairedExample], chunk: int = 256) -> ClsFeatures:
    """Unimodal [CLS] means and standard deviations, no tape."""
    parts: Dict[str, List[np.ndarray]] = {"vm": [], "vs": [], "tm": [], "ts": []}
    with no_grad():
        for start in range(0, len(examples), chunk):
            batch = stack_examples(examples, range(start, min(start + chunk, len(examples))))
            uni = model.unimodal(*model.encode(batch.vision, batch.text))
            v, t = uni.vision.cls(), uni.text.cls()
            parts["vm"].append(v.mu.data)
            parts["vs"].append(v.sigma().data)
            parts["tm"].append(t.mu.data)
            parts["ts"].append(t.sigma().data)
    return ClsFeatures(*(np.concatenate(parts[k]) for k in ("vm", "vs", "tm", "ts")))


def similarity_matrix(features: ClsFeatures, loss: LossConfig) -> np.ndarray:
    """Rows are vision queries, columns text candidates."""
    dist = pairwise_w2_numpy(features.vision_mu, features.vision_sigma, features.text_mu, features.text_sigma)
    return loss.a * dist + loss.b


def true_partner_ranks(sim: np.ndarray) -> np.ndarray:
    """0-based rank of candidate ``i`` for query ``i`` under a stable descending sort."""
    order = np.argsort(-sim, axis=1, kind="stable")
    return np.argmax(order == np.arange(sim.shape[0])[:, None], axis=1)


def recall_at_k(ranks: np.ndarray, ks: Sequence[int]) -> Dict[str, float]:
    return {f"r@{k}": float(np.mean(ranks < k)) for k in ks}


@dataclass
class RetrievalReport:
    i2t: Dict[str, float]
    t2i: Dict[str, float]
    candidates: int
    per_query: pd.DataFrame

    def to_dict(self) -> Dict[str, object]:
        return {"i2t": self.i2t, "t2i": self.t2i, "candidates": self.candidates}


def evaluate_retrieval(
    model: DistributionVLModel, examples: Sequence[PairedExample], loss: LossConfig, ks: Sequence[int] = (1, 5, 10)
) -> RetrievalReport:
    if not examples:
        raise ObjectiveError("retrieval needs at least one test pair")
    if any(k < 1 for k in ks):
        raise ObjectiveError(f"recall cut-offs must be positive, got {list(ks)}")
    sim = similarity_matrix(encode_cls(model, examples), loss)
    i2t = true_partner_ranks(sim)
    t2i = true_partner_ranks(sim.T)
    per_query = pd.DataFrame(
        {
            "query": np.arange(len(examples)),
            "concept": [e.concept_id for e in examples],
            "i2t_rr": 1.0 / (i2t + 1),
            "i2t_hit1": (i2t == 0).astype(int),
            "t2i_rr": 1.0 / (t2i + 1),
            "t2i_hit1": (t2i == 0).astype(int),
        },
        columns=PER_QUERY_COLUMNS,
    )
    return RetrievalReport(recall_at_k(i2t, ks), recall_at_k(t2i, ks), len(examples), per_query)


def chance_bounds(candidates: int, queries: int, level: float = 0.95) -> Tuple[float, float]:
    """Binomial interval of recall@1 for a model that ranks at random."""
    tail = (1.0 - level) / 2.0
    dist = stats.binom(queries, 1.0 / candidates)
    return float(dist.ppf(tail)) / queries, float(dist.ppf(1.0 - tail)) / queries
