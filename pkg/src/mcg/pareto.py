"""Greedy pairwise Pareto-front search over ranked-list take counts.

Instead of sweeping every combination of per-list counts (exponential in the
number of lists), lists are folded in one at a time: sample count levels,
evaluate all level pairs, keep the non-dominated points, resample, repeat.
The cost is exactly (R-1) * s^2 quality evaluations for R lists sampled at s
levels. Counts on the cost axis are raw sums; duplicate removal applies only
when a working point is materialized.

Achievable quality is evaluated from per-list overlap tables: one
(n_proposals, n_instances) array of Jaccard overlaps per image, computed once
up front (see `overlap_table`), so each parameterization costs a max-reduce
rather than fresh mask comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ParameterError
from .evaluation import geometric_counts, jaccard


@dataclass(frozen=True)
class ParetoPoint:
    n_proposals: int
    quality: float
    params: tuple[int, ...]


@dataclass
class FrontParams:
    counts: tuple[int, ...]
    list_ids: tuple[str, ...] = ()
    infeasible: bool = False

    def as_dict(self) -> dict[str, int]:
        ids = self.list_ids or tuple(f"list_{i}" for i in range(len(self.counts)))
        return {list_id: n for list_id, n in zip(ids, self.counts)}


def overlap_table(masks: Sequence[np.ndarray], gt: np.ndarray) -> np.ndarray:
    """(n_masks, n_instances) Jaccard overlaps against every gt instance."""
    gt = np.asarray(gt)
    k = int(gt.max())
    table = np.zeros((len(masks), k), dtype=np.float64)
    instance_masks = [gt == i for i in range(1, k + 1)]
    for row, mask in enumerate(masks):
        for col, instance in enumerate(instance_masks):
            table[row, col] = jaccard(mask, instance)
    return table


def pareto_filter(points: Sequence[ParetoPoint]) -> list[ParetoPoint]:
    """Non-dominated points, sorted by proposal count ascending.

    A point is dominated when another needs no more proposals and achieves at
    least its quality, strictly better in one of the two. Equal (count,
    quality) duplicates keep the lexicographically smallest params.
    """
    ordered = sorted(points, key=lambda p: (p.n_proposals, -p.quality, p.params))
    front: list[ParetoPoint] = []
    best_quality = -np.inf
    for p in ordered:
        if p.quality > best_quality:
            front.append(p)
            best_quality = p.quality
    return front


def _resample_front(front: list[ParetoPoint], samples: int) -> list[ParetoPoint]:
    """Exactly `samples` points spread geometrically along the count axis.

    Duplicate geometric picks are replaced by evenly-spread leftover front
    points so no sample slot is wasted; fronts still shorter than `samples`
    are padded by repetition so sweep sizes stay fixed."""
    if not front:
        raise ParameterError("cannot resample an empty front")
    if len(front) > samples:
        counts = np.array([p.n_proposals for p in front], dtype=np.float64)
        lo = max(counts[0], 1.0)
        hi = max(counts[-1], lo)
        targets = np.geomspace(lo, hi, samples - 1) if samples > 1 else [hi]
        seen = set()
        unique = [front[0]]
        seen.add(front[0].params)
        for t in targets:
            idx = int(np.searchsorted(counts, t, side="right")) - 1
            p = front[max(idx, 0)]
            if p.params not in seen:
                seen.add(p.params)
                unique.append(p)
        leftovers = [p for p in front if p.params not in seen]
        need = samples - len(unique)
        if need > 0 and leftovers:
            spread = np.unique(np.linspace(0, len(leftovers) - 1,
                                           min(need, len(leftovers))).round()
                               .astype(int))
            unique.extend(leftovers[i] for i in spread)
        front = sorted(unique, key=lambda p: p.n_proposals)
    out = list(front)
    while len(out) < samples:
        out.append(out[-1])
    return out[:samples]


# [list][image] -> (n_proposals, n_instances) overlap array
OverlapLists = Sequence[Sequence[np.ndarray]]


def _quality_at(overlap_lists: OverlapLists, counts: Sequence[int]) -> float:
    """Achievable instance-level Jaccard of the pooled top-count prefixes."""
    per_instance: list[np.ndarray] = []
    n_images = len(overlap_lists[0])
    for img in range(n_images):
        k = overlap_lists[0][img].shape[1]
        best = np.zeros(k, dtype=np.float64)
        for take, tables in zip(counts, overlap_lists):
            rows = tables[img][: int(take)]
            if rows.shape[0]:
                np.maximum(best, rows.max(axis=0), out=best)
        per_instance.append(best)
    return float(np.concatenate(per_instance).mean())


def greedy_front_combine(overlap_lists: OverlapLists, s_samples: int
                         ) -> tuple[list[ParetoPoint], int]:
    """Fold ranked lists pairwise into a Pareto front of (count, quality).

    Returns the front and the number of quality evaluations spent, which is
    exactly (R - 1) * s_samples^2.
    """
    r = len(overlap_lists)
    if r < 2:
        raise ParameterError(f"need at least 2 ranked lists, got {r}")
    if s_samples < 2:
        raise ParameterError(f"need at least 2 sample levels, got {s_samples}")
    n_images = len(overlap_lists[0])
    if n_images == 0 or sum(t.shape[1] for t in overlap_lists[0]) == 0:
        raise ParameterError("corpus has no ground-truth instances")

    def levels_of(list_idx: int) -> list[int]:
        longest = max((t.shape[0] for t in overlap_lists[list_idx]), default=0)
        return geometric_counts(longest, s_samples)

    evaluations = 0
    front = [ParetoPoint(n, 0.0, (n,)) for n in levels_of(0)]
    for j in range(1, r):
        new_levels = levels_of(j)
        base = _resample_front(pareto_filter(front), s_samples) if j > 1 else front
        candidates = []
        for p in base:
            for n in new_levels:
                params = p.params + (n,)
                quality = _quality_at(overlap_lists[: j + 1], params)
                evaluations += 1
                candidates.append(ParetoPoint(sum(params), quality, params))
        front = pareto_filter(candidates)
    return front, evaluations


def select_working_point(front: Sequence[ParetoPoint],
                         max_proposals: int | None = None,
                         min_quality: float | None = None) -> FrontParams:
    """Pick the front point matching a count cap or a quality floor.

    An infeasible quality floor falls back to the best-quality point with a
    raised flag.
    """
    if not front:
        raise ParameterError("front is empty")
    if (max_proposals is None) == (min_quality is None):
        raise ParameterError("give exactly one of max_proposals / min_quality")
    ordered = pareto_filter(front)
    if max_proposals is not None:
        feasible = [p for p in ordered if p.n_proposals <= max_proposals]
        if not feasible:
            return FrontParams(ordered[0].params)  # the cheapest point available
        best = max(feasible, key=lambda p: (p.quality, -p.n_proposals))
        return FrontParams(best.params)
    feasible = [p for p in ordered if p.quality >= min_quality]
    if feasible:
        best = min(feasible, key=lambda p: (p.n_proposals, -p.quality))
        return FrontParams(best.params)
    best = max(ordered, key=lambda p: (p.quality, -p.n_proposals))
    return FrontParams(best.params, infeasible=True)


def combine_at(counts: Sequence[int], lists: Sequence[Sequence],
               mask_of: Callable, j_threshold: float = 0.95) -> list:
    """Concatenate each list's top-N in list order, then dedup greedily."""
    if len(counts) != len(lists):
        raise ParameterError(
            f"got {len(counts)} counts for {len(lists)} ranked lists"
        )
    pool = []
    for take, ranked in zip(counts, lists):
        take = int(take)
        if take < 0 or take > len(ranked):
            raise ParameterError(
                f"take count {take} invalid for a list of {len(ranked)}"
            )
        pool.extend(ranked[:take])
    kept = []
    kept_masks: list[np.ndarray] = []
    for item in pool:
        mask = mask_of(item)
        if all(jaccard(mask, other) <= j_threshold for other in kept_masks):
            kept.append(item)
            kept_masks.append(mask)
    return kept
