"""Synthetic paired corpus with controllable cross-concept ambiguity.

Concepts come in sibling pairs ``(2j, 2j+1)``. Each concept owns a pool of
``synonym_count`` tokens per modality; ``round(overlap · synonym_count)`` of
them are shared with the sibling and the rest are private. Pool layout is
scrambled by a seeded vocabulary permutation per modality.
"""

from __future__ import annotations

from typing import Dict, List, Literal

import numpy as np

from distvlp.engine.rng import SeededRng, Streams
from distvlp.exceptions import DistVlpError
from distvlp.logging import data_logger
from models import PairedExample, SyntheticCorpusConfig

Split = Literal["train", "test"]
_SPLIT_STREAM = {"train": 0, "test": 1}
_POOL_STREAM = 2


class CorpusError(DistVlpError):
    """Corpus configuration cannot be realized or a corpus file is malformed."""

    error_type = "invalid_corpus"


def _pool_layout(concepts: int, size: int, overlap: float, vocab: int) -> List[np.ndarray]:
    if concepts * size > vocab:
        raise CorpusError(f"vocabulary of {vocab} cannot hold {concepts} concepts x {size} tokens")
    shared = int(round(overlap * size))
    pools = []
    for c in range(concepts):
        base = (c // 2) * 2 * size
        sibling_exists = c ^ 1 < concepts
        if c % 2 == 0 or not sibling_exists:
            pools.append(np.arange(base, base + size))
        else:
            private = np.arange(base + size, base + 2 * size - shared)
            pools.append(np.concatenate([np.arange(base, base + shared), private]))
    return pools


def concept_pools(cfg: SyntheticCorpusConfig, seed: int) -> Dict[str, List[np.ndarray]]:
    """Token pool of every concept, per modality."""
    rng = SeededRng(seed, Streams.CORPUS).child(_POOL_STREAM)
    pools = {}
    for i, (modality, vocab) in enumerate((("vision", cfg.vision_vocab), ("text", cfg.text_vocab))):
        relabel = rng.child(i).permutation(vocab)
        layout = _pool_layout(cfg.concepts, cfg.synonym_count, cfg.overlap, vocab)
        pools[modality] = [relabel[p] for p in layout]
    return pools


def sharing_fraction(pools: List[np.ndarray]) -> float:
    """Mean share of a concept's pool that also appears in another concept's pool."""
    counts: Dict[int, int] = {}
    for pool in pools:
        for token in set(pool.tolist()):
            counts[token] = counts.get(token, 0) + 1
    return float(np.mean([np.mean([counts[t] > 1 for t in pool.tolist()]) for pool in pools]))


def _emit(pool: np.ndarray, length: int, vocab: int, noise_rate: float, rng: SeededRng) -> List[int]:
    tokens = pool[rng.integers(0, len(pool), size=length)]
    noisy = rng.uniform((length,)) < noise_rate
    tokens = np.where(noisy, rng.integers(0, vocab, size=length), tokens)
    return [int(t) for t in tokens]


def generate_corpus(cfg: SyntheticCorpusConfig, seed: int, split: Split = "train") -> List[PairedExample]:
    """Examples of one split; example ``i`` draws only from its own derived stream."""
    if split not in _SPLIT_STREAM:
        raise CorpusError(f"unknown split {split!r}")
    pools = concept_pools(cfg, seed)
    size = cfg.train_size if split == "train" else cfg.test_size
    stream = SeededRng(seed, Streams.CORPUS).child(_SPLIT_STREAM[split])
    examples = []
    for i in range(size):
        rng = stream.child(i)
        concept = int(rng.integers(0, cfg.concepts))
        examples.append(
            PairedExample(
                concept_id=concept,
                vision_tokens=_emit(pools["vision"][concept], cfg.vision_tokens, cfg.vision_vocab, cfg.noise_rate, rng.child(0)),
                text_tokens=_emit(pools["text"][concept], cfg.text_tokens, cfg.text_vocab, cfg.noise_rate, rng.child(1)),
            )
        )
    data_logger.debug(
        f"Generated {size} {split} examples",
        extra={"action": "generate_corpus", "status": "success"},
    )
    return examples
