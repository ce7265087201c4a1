"""Combinatorial enumeration of region tuples as object proposals.

Candidates are hierarchy nodes whose height (the strength at which they merge
into their parent; infinity for the root) clears a floor. Tuples are
connected sets of pairwise-disjoint nodes that are simultaneously maximal at
some cut, ranked by the minimum height of their members.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .hierarchy import Ucm
from .regiontree import compute_neighbors

TUPLE_SIZE_NAMES = {1: "singletons", 2: "pairs", 3: "triplets", 4: "4tuples"}

# instrumentation: how many pixel masks have been materialized
_mask_materializations = 0


def mask_materializations() -> int:
    return _mask_materializations


@dataclass(frozen=True)
class Proposal:
    hierarchy_id: int
    node_ids: tuple[int, ...]
    rank_key: float

    def sort_key(self):
        return (-self.rank_key, self.node_ids)


@dataclass
class RankedList:
    list_id: str
    tuple_size: int
    proposals: list[Proposal] = field(default_factory=list)

    def top(self, n: int) -> list[Proposal]:
        return self.proposals[: max(0, n)]


def _connected_subsets(adjacency: dict[int, frozenset[int]], max_size: int
                       ) -> set[tuple[int, ...]]:
    """All connected induced subsets of size 1..max_size, each exactly once."""
    found: set[tuple[int, ...]] = set()

    def grow(current: list[int], frontier: set[int], anchor: int, banned: set[int]):
        found.add(tuple(sorted(current)))
        if len(current) == max_size:
            return
        local_banned = set(banned)
        for v in sorted(frontier - local_banned):
            new_frontier = (frontier | {
                n for n in adjacency[v] if n > anchor and n not in current
            }) - {v}
            grow(current + [v], new_frontier, anchor, local_banned)
            local_banned.add(v)

    for anchor in sorted(adjacency):
        start_frontier = {n for n in adjacency[anchor] if n > anchor}
        grow([anchor], start_frontier, anchor, set())
    return found


def enumerate_tuples(u: Ucm, max_tuple: int, strength_floor: float = 0.0,
                     hierarchy_id: int = 0) -> list[RankedList]:
    """One ranked list per tuple size 1..max_tuple.

    A k-tuple's rank is the minimum member height; descending order, ties by
    the lexicographic node-id tuple.
    """
    if not 1 <= max_tuple <= 4:
        raise ParameterError(f"max_tuple must be in 1..4, got {max_tuple}")
    disappear = u.disappear_levels()
    # singletons need no cut context; nodes whose interval is empty (created
    # and absorbed at one level) still count once their height clears the floor
    tuples: set[tuple[int, ...]] = {
        (n,) for n in range(u.n_nodes) if disappear[n] >= strength_floor
    }
    if max_tuple > 1:
        for record in compute_neighbors(u, strength_floor):
            tuples |= _connected_subsets(record.neighbors, max_tuple)

    by_size: dict[int, list[Proposal]] = {k: [] for k in range(1, max_tuple + 1)}
    for nodes in tuples:
        rank = min(float(disappear[n]) for n in nodes)
        by_size[len(nodes)].append(Proposal(hierarchy_id, nodes, rank))
    lists = []
    for size in range(1, max_tuple + 1):
        proposals = sorted(by_size[size], key=Proposal.sort_key)
        lists.append(RankedList(TUPLE_SIZE_NAMES[size], size, proposals))
    return lists


def proposal_mask(p: Proposal, u: Ucm) -> np.ndarray:
    """Pixel mask of the union of the proposal's regions."""
    global _mask_materializations
    _mask_materializations += 1
    leaf_sets = u.leaf_sets()
    leaves: set[int] = set()
    for node in p.node_ids:
        if not 0 <= node < u.n_nodes:
            raise ParameterError(
                f"node id {node} does not exist in hierarchy of {u.n_nodes} nodes"
            )
        leaves |= leaf_sets[node]
    return np.isin(u.finest, sorted(leaves))


def floor_for_budget(u: Ucm, node_budget: int) -> float:
    """Smallest height floor that keeps at most `node_budget` candidates."""
    if node_budget < 1:
        raise ParameterError(f"node budget must be >= 1, got {node_budget}")
    heights = sorted((float(v) for v in u.disappear_levels()), reverse=True)
    if len(heights) <= node_budget:
        return 0.0
    return heights[node_budget - 1]


def dedup(pool: list[Proposal], hierarchies: list[Ucm],
          j_threshold: float = 0.95) -> list[Proposal]:
    """Greedy first-wins duplicate removal at a Jaccard threshold.

    A proposal survives iff its overlap with every earlier survivor stays at
    or below the threshold; survivor order is the pool order.
    """
    from .evaluation import jaccard

    if not 0.0 < j_threshold <= 1.0:
        raise ParameterError(f"dedup threshold must be in (0, 1], got {j_threshold}")
    kept: list[Proposal] = []
    kept_masks: list[np.ndarray] = []
    for p in pool:
        mask = proposal_mask(p, hierarchies[p.hierarchy_id])
        if all(jaccard(mask, other) <= j_threshold for other in kept_masks):
            kept.append(p)
            kept_masks.append(mask)
    return kept
