"""Randomized Tukey HSD over paired per-item scores.

Under the null the system labels are exchangeable within an item, so each
randomization permutes every item's scores independently across systems and
records the largest absolute difference between system means. A pair's
p-value is the add-one fraction of randomizations whose maximum reaches the
pair's observed absolute difference.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from distvlp.engine.rng import SeededRng, Streams
from distvlp.exceptions import StatisticsError
from distvlp.logging import stats_logger

UNDEFINED = "undefined"
HSD_COLUMNS = ["sysA", "sysB", "p", "effect"]
EXHAUSTIVE_LIMIT = 200_000
RESIDUAL_FLOOR = 1e-24
# Absolute slack when comparing a randomized maximum against an observed difference.
TIE_TOLERANCE = 1e-12


@dataclass
class PairComparison:
    sys_a: str
    sys_b: str
    difference: float
    p_value: float
    effect_size: Optional[float]

    def row(self) -> dict:
        effect = UNDEFINED if self.effect_size is None else self.effect_size
        return {"sysA": self.sys_a, "sysB": self.sys_b, "p": self.p_value, "effect": effect}


def _check_scores(scores: np.ndarray) -> np.ndarray:
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 2:
        raise StatisticsError(f"scores must be a systems x items table, got shape {scores.shape}")
    m, n = scores.shape
    if m < 2 or n < 2:
        raise StatisticsError(f"need at least 2 systems and 2 items, got {m} x {n}")
    if not np.all(np.isfinite(scores)):
        raise StatisticsError("scores contain NaN or infinite values")
    return scores


def residual_variance(scores: np.ndarray) -> float:
    """Within-system mean square of a one-way ANOVA with systems as groups."""
    m, n = scores.shape
    if np.all(scores == scores[:, :1]):
        return 0.0
    centered = scores - scores.mean(axis=1, keepdims=True)
    mse = float((centered ** 2).sum() / (m * n - m))
    # rounding residue of constant rows is not a spread
    if mse <= RESIDUAL_FLOOR * max(1.0, float(np.mean(scores ** 2))):
        return 0.0
    return mse


def _max_mean_gap(means: np.ndarray) -> np.ndarray:
    return means.max(axis=-1) - means.min(axis=-1)


def _randomized_maxima(scores: np.ndarray, trials: int, rng: SeededRng) -> np.ndarray:
    m, n = scores.shape
    order = np.argsort(rng.uniform((trials, m, n)), axis=1)
    shuffled = np.take_along_axis(np.broadcast_to(scores, (trials, m, n)), order, axis=1)
    return _max_mean_gap(shuffled.mean(axis=2))


def _exhaustive_maxima(scores: np.ndarray) -> np.ndarray:
    m, n = scores.shape
    total = math.factorial(m) ** n
    if total > EXHAUSTIVE_LIMIT:
        raise StatisticsError(f"exhaustive enumeration needs {total} relabellings (limit {EXHAUSTIVE_LIMIT})")
    perms = list(itertools.permutations(range(m)))
    maxima = np.empty(total)
    columns = np.arange(n)
    for k, choice in enumerate(itertools.product(perms, repeat=n)):
        rows = np.array(choice).T
        maxima[k] = _max_mean_gap(scores[rows, columns].mean(axis=1))
    return maxima


def tukey_hsd(
    scores: np.ndarray,
    trials: int,
    rng: SeededRng,
    names: Optional[Sequence[str]] = None,
    chunk_size: int = 250,
    workers: int = 1,
    exhaustive: bool = False,
) -> List[PairComparison]:
    """Compare every pair of rows of an ``m × n`` (systems × items) score table.

    Randomizations run in chunks, chunk ``c`` drawing from ``rng.child(c)``, so
    the counts do not depend on ``workers``. With ``exhaustive=True`` every
    within-item relabelling is enumerated instead and p is the exact fraction.
    """
    scores = _check_scores(scores)
    m, _ = scores.shape
    names = [str(s) for s in (names if names is not None else range(m))]
    if len(names) != m:
        raise StatisticsError(f"{len(names)} names for {m} systems")

    if exhaustive:
        maxima = _exhaustive_maxima(scores)
    else:
        if trials < 1:
            raise StatisticsError(f"trials must be positive, got {trials}")
        if chunk_size < 1:
            raise StatisticsError(f"chunk_size must be positive, got {chunk_size}")
        sizes = [min(chunk_size, trials - start) for start in range(0, trials, chunk_size)]
        jobs = [(size, rng.child(c)) for c, size in enumerate(sizes)]
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(lambda job: _randomized_maxima(scores, *job), jobs))
        else:
            parts = [_randomized_maxima(scores, size, child) for size, child in jobs]
        maxima = np.concatenate(parts)

    means = scores.mean(axis=1)
    mse = residual_variance(scores)
    results = []
    for a, b in itertools.combinations(range(m), 2):
        diff = float(means[a] - means[b])
        reached = int(np.sum(maxima >= abs(diff) - TIE_TOLERANCE))
        if exhaustive:
            p_value = reached / len(maxima)
        else:
            p_value = (reached + 1) / (len(maxima) + 1)
        effect = diff / math.sqrt(mse) if mse > 0 else None
        results.append(PairComparison(names[a], names[b], diff, p_value, effect))
    stats_logger.info(
        f"Compared {m} systems over {scores.shape[1]} items with {len(maxima)} relabellings",
        extra={"action": "tukey_hsd", "status": "success"},
    )
    return results


def hsd_from_frame(frame: pd.DataFrame, trials: int, seed: int, **kwargs) -> pd.DataFrame:
    """Items are rows and systems are columns, as in the scores CSV."""
    rng = SeededRng(seed, Streams.HSD)
    pairs = tukey_hsd(frame.to_numpy(dtype=np.float64).T, trials, rng, names=list(frame.columns), **kwargs)
    return pd.DataFrame([p.row() for p in pairs], columns=HSD_COLUMNS)
