from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from distvlp.engine.rng import SeededRng
from models import MaskingConfig

from .corpus import CorpusError


@dataclass
class MaskedText:
    """Text ids after substitution, with labels only at selected positions."""

    tokens: np.ndarray
    labels: np.ndarray
    selected: np.ndarray
    branch: np.ndarray

    @property
    def count(self) -> int:
        return int(self.selected.sum())


IGNORE_LABEL = -1

# Branch codes recorded per selected position; 0 where nothing was selected.
MASK_BRANCH, RANDOM_BRANCH, KEEP_BRANCH = 1, 2, 3


def mask_tokens(
    text_tokens: np.ndarray,
    rng: SeededRng,
    mask_id: int,
    vocab: int,
    cfg: Optional[MaskingConfig] = None,
    ensure_one: bool = True,
) -> MaskedText:
    """Select positions with ``select_prob``, then mask / randomize / keep them.

    A row with no selection is redrawn once; if still empty its first position
    is forced. ``ensure_one=False`` skips both (used for calibration).
    """
    cfg = cfg or MaskingConfig()
    tokens = np.asarray(text_tokens, dtype=np.int64)
    if 0 <= mask_id < vocab:
        raise CorpusError(f"mask id {mask_id} collides with the content vocabulary [0, {vocab})")
    squeeze = tokens.ndim == 1
    tokens = np.atleast_2d(tokens)
    length = tokens.shape[1]

    selected = rng.uniform(tokens.shape) < cfg.select_prob
    if ensure_one and length:
        empty = ~selected.any(axis=1)
        if empty.any():
            redraw = rng.uniform((int(empty.sum()), length)) < cfg.select_prob
            selected[empty] = redraw
            still_empty = ~selected.any(axis=1)
            selected[still_empty, 0] = True

    roll = rng.uniform(tokens.shape)
    branch = np.where(roll < cfg.mask_frac, MASK_BRANCH, np.where(roll < cfg.mask_frac + cfg.random_frac, RANDOM_BRANCH, KEEP_BRANCH))
    branch = np.where(selected, branch, 0)
    random_ids = rng.integers(0, vocab, size=tokens.shape)

    out = np.where(branch == MASK_BRANCH, mask_id, tokens)
    out = np.where(branch == RANDOM_BRANCH, random_ids, out)
    labels = np.where(selected, tokens, IGNORE_LABEL)
    result = MaskedText(out, labels, selected, branch)
    if squeeze:
        result = MaskedText(out[0], labels[0], selected[0], branch[0])
    return result
