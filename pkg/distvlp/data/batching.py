from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from distvlp.engine.rng import SeededRng
from models import PairedExample

from .corpus import CorpusError


@dataclass
class Batch:
    indices: np.ndarray
    concepts: np.ndarray
    vision: np.ndarray
    text: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)


def stack_examples(examples: Sequence[PairedExample], indices: Sequence[int]) -> Batch:
    chosen = [examples[i] for i in indices]
    return Batch(
        indices=np.asarray(indices, dtype=np.int64),
        concepts=np.array([e.concept_id for e in chosen], dtype=np.int64),
        vision=np.array([e.vision_tokens for e in chosen], dtype=np.int64).reshape(len(chosen), -1),
        text=np.array([e.text_tokens for e in chosen], dtype=np.int64).reshape(len(chosen), -1),
    )


def make_batches(examples: Sequence[PairedExample], batch_size: int, rng: SeededRng) -> Iterator[Batch]:
    """One shuffled epoch of full batches; the remainder is dropped."""
    if batch_size < 2:
        raise CorpusError(f"batch_size must be at least 2, got {batch_size}")
    if batch_size > len(examples):
        raise CorpusError(f"batch_size {batch_size} exceeds corpus size {len(examples)}")
    order = rng.permutation(len(examples))
    for start in range(0, len(order) - batch_size + 1, batch_size):
        yield stack_examples(examples, order[start : start + batch_size])
