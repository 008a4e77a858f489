from .corpus import CorpusError, concept_pools, generate_corpus, sharing_fraction
from .masking import IGNORE_LABEL, KEEP_BRANCH, MASK_BRANCH, RANDOM_BRANCH, MaskedText, mask_tokens
from .batching import Batch, make_batches, stack_examples

__all__ = [
    "CorpusError",
    "concept_pools",
    "generate_corpus",
    "sharing_fraction",
    "IGNORE_LABEL",
    "MASK_BRANCH",
    "RANDOM_BRANCH",
    "KEEP_BRANCH",
    "MaskedText",
    "mask_tokens",
    "Batch",
    "make_batches",
    "stack_examples",
]
