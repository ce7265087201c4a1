"""Ultrametric contour maps and their dual region dendrograms.

A hierarchy is stored as the finest partition (its leaves) plus an ordered
merge list with non-decreasing strengths. Thresholding the equivalent
strength grid at any level gives back a valid closed-boundary partition;
both views reconstruct each other.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import grids
from .errors import ParameterError


class Merge(NamedTuple):
    node_id: int
    children: tuple[int, ...]
    level: float


@dataclass(eq=False)
class Ucm:
    """Finest partition plus ordered merges; leaves 0..K-1, internal K..K+m-1."""

    finest: np.ndarray
    merges: tuple[Merge, ...]

    def __post_init__(self):
        self.finest = np.asarray(self.finest, dtype=grids.LABEL_DTYPE)
        self.merges = tuple(
            Merge(int(m[0]), tuple(int(c) for c in m[1]), float(m[2])) for m in self.merges
        )
        self._leaf_sets: list[frozenset[int]] | None = None
        self._disappear: np.ndarray | None = None

    @property
    def height(self) -> int:
        return self.finest.shape[0]

    @property
    def width(self) -> int:
        return self.finest.shape[1]

    @property
    def n_leaves(self) -> int:
        return int(self.finest.max()) + 1

    @property
    def n_nodes(self) -> int:
        return self.n_leaves + len(self.merges)

    @property
    def root(self) -> int:
        return self.n_nodes - 1 if self.merges else 0

    @property
    def levels(self) -> tuple[float, ...]:
        """Distinct merge strengths, ascending."""
        return tuple(sorted({m.level for m in self.merges}))

    @property
    def max_level(self) -> float:
        return self.merges[-1].level if self.merges else 0.0

    def parents(self) -> np.ndarray:
        """Parent node id per node; root (and a merge-less single leaf) gets -1."""
        parent = np.full(self.n_nodes, -1, dtype=np.int64)
        for m in self.merges:
            for c in m.children:
                parent[c] = m.node_id
        return parent

    def appear_levels(self) -> np.ndarray:
        """Strength of the merge that created each node (leaves: 0)."""
        appear = np.zeros(self.n_nodes, dtype=np.float64)
        for m in self.merges:
            appear[m.node_id] = m.level
        return appear

    def disappear_levels(self) -> np.ndarray:
        """Strength at which each node merges into its parent (root: +inf)."""
        if self._disappear is None:
            out = np.full(self.n_nodes, math.inf, dtype=np.float64)
            for m in self.merges:
                for c in m.children:
                    out[c] = m.level
            self._disappear = out
        return self._disappear

    def leaf_sets(self) -> list[frozenset[int]]:
        """Leaf ids under each node (cached)."""
        if self._leaf_sets is None:
            sets: list[frozenset[int]] = [frozenset((i,)) for i in range(self.n_leaves)]
            for m in self.merges:
                sets.append(frozenset().union(*(sets[c] for c in m.children)))
            self._leaf_sets = sets
        return self._leaf_sets

    def node_mask(self, node: int) -> np.ndarray:
        if not 0 <= node < self.n_nodes:
            raise ParameterError(f"node id {node} out of range for {self.n_nodes} nodes")
        leaves = self.leaf_sets()[node]
        return np.isin(self.finest, list(leaves))

    def validate(self) -> None:
        """Raise ParameterError on any violated structural invariant."""
        if not grids.is_canonical(self.finest):
            raise ParameterError("finest partition is not canonical")
        k = self.n_leaves
        prev = -math.inf
        merged: set[int] = set()
        for i, m in enumerate(self.merges):
            if m.node_id != k + i:
                raise ParameterError(f"merge ids must be sequential, got {m.node_id}")
            if m.level < prev:
                raise ParameterError("merge strengths must be non-decreasing")
            prev = m.level
            for c in m.children:
                if c in merged:
                    raise ParameterError(f"node {c} has more than one parent")
                if c >= m.node_id:
                    raise ParameterError("children must precede their merge")
                merged.add(c)
        if self.merges:
            if len(self.leaf_sets()[self.root]) != k:
                raise ParameterError("last merge does not cover all leaves")
        elif k > 1:
            raise ParameterError("a multi-leaf hierarchy needs merges up to a root")


class _CutTracker:
    """Applies merges in ascending order, answering leaf -> region-at-cut."""

    def __init__(self, u: Ucm):
        self._u = u
        self._up = np.arange(u.n_nodes, dtype=np.int64)
        self._next = 0

    def advance(self, t: float, inclusive: bool) -> None:
        merges = self._u.merges
        while self._next < len(merges):
            m = merges[self._next]
            if m.level <= t if inclusive else m.level < t:
                for c in m.children:
                    self._up[c] = m.node_id
                self._next += 1
            else:
                break

    def leaf_regions(self) -> np.ndarray:
        """Current region node id per leaf, with path compression."""
        up = self._up
        out = np.arange(self._u.n_leaves, dtype=np.int64)
        for leaf in range(self._u.n_leaves):
            node = leaf
            while up[node] != node:
                node = up[node]
            trail = leaf
            while up[trail] != trail:
                up[trail], trail = node, up[trail]
            out[leaf] = node
        return out


def finest_partition(cm: np.ndarray) -> np.ndarray:
    """Watershed-by-flooding superpixels from a contour map.

    Each pixel's energy is the max of its incident edge strengths. Equal-energy
    plateaus with no lower neighbour seed one region each; remaining pixels are
    claimed in ascending energy order, ties by lower pixel index, and for
    re-pushed pixels by earliest push (so a region's rim is claimed from its
    own interior rather than across the contour).
    """
    energy = grids.pixel_energy(cm)
    h, w = energy.shape
    comp = grids.canonicalize(energy)
    n_comp = int(comp.max()) + 1

    flat_e = energy.ravel()
    flat_c = comp.ravel()
    lower = np.zeros(n_comp, dtype=bool)  # component has a strictly lower neighbour
    for axis_slices in (((slice(None), slice(0, -1)), (slice(None), slice(1, None))),
                        ((slice(0, -1), slice(None)), (slice(1, None), slice(None)))):
        a, b = axis_slices
        ea, eb = energy[a], energy[b]
        ca, cb = comp[a], comp[b]
        lower[ca[eb < ea]] = True
        lower[cb[ea < eb]] = True

    seed_comps = np.flatnonzero(~lower)
    labels = np.full(h * w, -1, dtype=np.int64)
    for region, c in enumerate(seed_comps):
        labels[flat_c == c] = region

    heap: list[tuple[float, int, int, int]] = []
    seq = 0

    def push_neighbors(idx: int, region: int):
        nonlocal seq
        y, x = divmod(idx, w)
        for ny, nx in ((y - 1, x), (y, x - 1), (y, x + 1), (y + 1, x)):
            if 0 <= ny < h and 0 <= nx < w:
                n_idx = ny * w + nx
                if labels[n_idx] < 0:
                    heapq.heappush(heap, (flat_e[n_idx], n_idx, seq, region))
                    seq += 1

    for idx in np.flatnonzero(labels >= 0):
        push_neighbors(int(idx), int(labels[idx]))
    while heap:
        _, idx, _, region = heapq.heappop(heap)
        if labels[idx] >= 0:
            continue
        labels[idx] = region
        push_neighbors(idx, region)

    return grids.canonicalize(labels.reshape(h, w))


def _edge_pair_stats(finest: np.ndarray, cm: np.ndarray) -> dict[tuple[int, int], list[float]]:
    """Per adjacent-region pair: [sum, count, min, max] over shared edges."""
    stats: dict[tuple[int, int], list[float]] = {}
    h_vals = grids.horizontal_edges(cm)
    v_vals = grids.vertical_edges(cm)
    for (a_lab, b_lab, vals) in (
        (finest[:, :-1], finest[:, 1:], h_vals),
        (finest[:-1, :], finest[1:, :], v_vals),
    ):
        diff = a_lab != b_lab
        aa = a_lab[diff]
        bb = b_lab[diff]
        vv = vals[diff]
        lo = np.minimum(aa, bb)
        hi = np.maximum(aa, bb)
        for a, b, v in zip(lo.tolist(), hi.tolist(), vv.tolist()):
            st = stats.get((a, b))
            if st is None:
                stats[(a, b)] = [v, 1.0, v, v]
            else:
                st[0] += v
                st[1] += 1.0
                st[2] = min(st[2], v)
                st[3] = max(st[3], v)
    return stats


def _mean_level(st: list[float]) -> float:
    # a constant boundary's mean is that constant, bit for bit
    if st[2] == st[3]:
        return st[2]
    return st[0] / st[1]


def _greedy_agglomerate(
    n_leaves: int,
    stats: dict[tuple[int, int], list[float]],
    level_of: "callable",
) -> list[Merge]:
    """Merge the adjacent pair with the smallest level, repeatedly.

    Ties break on the (min id, max id) pair; recorded strengths are forced
    non-decreasing with a running max.
    """
    adj: dict[int, set[int]] = {i: set() for i in range(n_leaves)}
    heap: list[tuple[float, int, int]] = []
    for (a, b), st in sorted(stats.items()):
        adj[a].add(b)
        adj[b].add(a)
        heapq.heappush(heap, (level_of(st), a, b))

    merges: list[Merge] = []
    alive = set(range(n_leaves))
    next_id = n_leaves
    lam = 0.0
    while heap:
        level, a, b = heapq.heappop(heap)
        if a not in alive or b not in alive:
            continue
        u = next_id
        next_id += 1
        lam = max(lam, level)
        merges.append(Merge(u, (a, b), lam))
        alive.discard(a)
        alive.discard(b)
        alive.add(u)
        neighbors = (adj[a] | adj[b]) - {a, b}
        adj[u] = set()
        for r in sorted(neighbors):
            st_a = stats.pop((min(a, r), max(a, r)), None)
            st_b = stats.pop((min(b, r), max(b, r)), None)
            parts = [p for p in (st_a, st_b) if p is not None]
            st = [
                sum(p[0] for p in parts),
                sum(p[1] for p in parts),
                min(p[2] for p in parts),
                max(p[3] for p in parts),
            ]
            stats[(r, u)] = st
            adj[u].add(r)
            adj[r].discard(a)
            adj[r].discard(b)
            adj[r].add(u)
            heapq.heappush(heap, (level_of(st), r, u))
        del adj[a], adj[b]
    return merges


def build_ucm(finest: np.ndarray, cm: np.ndarray) -> Ucm:
    """Greedy agglomeration by minimum mean boundary strength."""
    finest = np.asarray(finest, dtype=grids.LABEL_DTYPE)
    if grids.contour_shape(*finest.shape) != cm.shape:
        raise ParameterError(
            f"contour grid {cm.shape} does not match partition {finest.shape}"
        )
    if not grids.is_canonical(finest):
        raise ParameterError("finest partition must be canonical")
    stats = _edge_pair_stats(finest, cm)
    merges = _greedy_agglomerate(int(finest.max()) + 1, stats, _mean_level)
    return Ucm(finest, tuple(merges))


def sample_hierarchy(u: Ucm, t: float, *, inclusive: bool = True) -> np.ndarray:
    """Partition at cut level t (merges with strength <= t applied).

    ``inclusive=False`` applies only merges strictly below t, i.e. the
    partition in which boundaries of strength exactly t are still present.
    """
    tracker = _CutTracker(u)
    tracker.advance(t, inclusive)
    leaf_regions = tracker.leaf_regions()
    return grids.relabel_by_first_occurrence(leaf_regions[u.finest])


def extract_boundary(labels: np.ndarray) -> np.ndarray:
    """Binary contour grid of the inter-pixel edges separating regions."""
    return grids.boundary_grid(labels)


def ucm_strength_grid(u: Ucm) -> np.ndarray:
    """Per inter-pixel edge: the strength at which its two regions merge."""
    grid = np.zeros(grids.contour_shape(u.height, u.width), dtype=np.float64)
    tracker = _CutTracker(u)
    for level in u.levels:
        tracker.advance(level, inclusive=False)
        labels = tracker.leaf_regions()[u.finest]
        np.maximum(grid, level * grids.boundary_grid(labels), out=grid)
    return grid


def finest_from_grid(grid: np.ndarray) -> np.ndarray:
    """Regions separated by any positive edge strength (canonical labels)."""
    h, w = grids.grid_shape_of_contour(grid)
    parent = list(range(h * w))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    he = grids.horizontal_edges(grid)
    ve = grids.vertical_edges(grid)
    ys, xs = np.nonzero(he == 0)
    for y, x in zip(ys.tolist(), xs.tolist()):
        a, b = find(y * w + x), find(y * w + x + 1)
        if a != b:
            parent[max(a, b)] = min(a, b)
    ys, xs = np.nonzero(ve == 0)
    for y, x in zip(ys.tolist(), xs.tolist()):
        a, b = find(y * w + x), find((y + 1) * w + x)
        if a != b:
            parent[max(a, b)] = min(a, b)
    roots = np.array([find(i) for i in range(h * w)], dtype=np.int64)
    return grids.relabel_by_first_occurrence(roots.reshape(h, w))


def ucm_from_strength_grid(grid: np.ndarray, finest: np.ndarray | None = None) -> Ucm:
    """Rebuild the dendrogram of an ultrametric strength grid.

    Grids produced from a hierarchy carry one constant strength per adjacent
    region pair, so the greedy mean agglomeration recovers the exact merge
    levels; adjacent leaves never separated by the grid merge at strength 0.
    """
    if finest is None:
        finest = finest_from_grid(grid)
    return build_ucm(finest, grid)
