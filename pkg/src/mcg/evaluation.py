"""Jaccard overlap metrics and achievable-quality curves.

A corpus is a pair of aligned sequences: per-image proposal mask pools and
per-image instance ground truths (integer maps, 0 = background). Achievable
quality assumes an oracle picks the best proposal for every instance.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import ParameterError

RECALL_THRESHOLDS = (0.5, 0.7, 0.85)


def jaccard(a: np.ndarray, b: np.ndarray) -> float:
    """Intersection over union of two binary masks; two empty masks give 0."""
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise ParameterError(f"mask dims differ: {a.shape} vs {b.shape}")
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 0.0
    return float(np.logical_and(a, b).sum() / union)


def instance_count(gt: np.ndarray) -> int:
    return int(np.asarray(gt).max())


def best_overlap_per_instance(pool: Sequence[np.ndarray], gt: np.ndarray) -> np.ndarray:
    """Best pool overlap for each instance id 1..K; an empty pool gives zeros."""
    gt = np.asarray(gt)
    k = instance_count(gt)
    best = np.zeros(k, dtype=np.float64)
    for instance in range(1, k + 1):
        target = gt == instance
        for mask in pool:
            j = jaccard(mask, target)
            if j > best[instance - 1]:
                best[instance - 1] = j
    return best


def _all_best_overlaps(pools: Sequence[Sequence[np.ndarray]],
                       gts: Sequence[np.ndarray]) -> np.ndarray:
    if len(pools) != len(gts):
        raise ParameterError("need one proposal pool per ground-truth image")
    chunks = [best_overlap_per_instance(pool, gt) for pool, gt in zip(pools, gts)]
    return np.concatenate(chunks) if chunks else np.zeros(0)


def instance_level_jaccard(pools: Sequence[Sequence[np.ndarray]],
                           gts: Sequence[np.ndarray]) -> float:
    """Mean best overlap over every instance of every corpus image."""
    best = _all_best_overlaps(pools, gts)
    if len(best) == 0:
        raise ParameterError("corpus has no ground-truth instances")
    return float(best.mean())


def recall_at(pools: Sequence[Sequence[np.ndarray]], gts: Sequence[np.ndarray],
              j_threshold: float) -> float:
    """Fraction of instances whose best overlap reaches the threshold."""
    if not 0.0 < j_threshold <= 1.0:
        raise ParameterError(f"recall threshold must be in (0, 1], got {j_threshold}")
    best = _all_best_overlaps(pools, gts)
    if len(best) == 0:
        raise ParameterError("corpus has no ground-truth instances")
    return float((best >= j_threshold).mean())


def quality_vs_count_curve(pools: Sequence[Sequence[np.ndarray]],
                           gts: Sequence[np.ndarray],
                           counts: Sequence[int],
                           ) -> list[tuple[int, float, float, float, float]]:
    """Metrics on ranked-pool prefixes at the given per-image counts."""
    counts = [int(c) for c in counts]
    if any(b > a for a, b in zip(counts[1:], counts)):
        raise ParameterError("counts must be ascending")
    rows = []
    for n in counts:
        prefix_pools = [pool[:n] for pool in pools]
        best = _all_best_overlaps(prefix_pools, gts)
        if len(best) == 0:
            raise ParameterError("corpus has no ground-truth instances")
        j_i = float(best.mean())
        recalls = [float((best >= t).mean()) for t in RECALL_THRESHOLDS]
        rows.append((n, j_i, recalls[0], recalls[1], recalls[2]))
    return rows


def geometric_counts(max_count: int, samples: int) -> list[int]:
    """`samples` count levels from 0 to max, geometrically spaced.

    Duplicates are kept so a sweep over the levels has a fixed, predictable
    size; a zero max yields all-zero levels.
    """
    if samples < 1:
        raise ParameterError(f"need at least one sample level, got {samples}")
    if max_count <= 0:
        return [0] * samples
    if samples == 1:
        return [max_count]
    levels = [0]
    steps = samples - 1
    for j in range(steps):
        frac = j / (steps - 1) if steps > 1 else 1.0
        levels.append(int(round(max_count ** frac)))
    return levels
