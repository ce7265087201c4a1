"""Per-node region descriptors computed by tree propagation.

One image scan fixes the leaf statistics; everything above the leaves is
propagated through the merge list, so the cost is pixels + merges rather than
pixels times levels. A single edge scan also fixes the shared-boundary table
between adjacent leaves, which serves perimeters, strength sums, neighbor
filtering, and proposal features.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import grids
from .errors import ParameterError
from .hierarchy import Ucm, ucm_strength_grid


@dataclass
class CutAdjacency:
    """Region adjacency of the partition that is maximal on [low, high)."""

    low: float
    high: float
    neighbors: dict[int, frozenset[int]]


def areas_with_touch_count(u: Ucm) -> tuple[np.ndarray, int]:
    """Per-node pixel areas plus the number of data touches spent.

    Touch accounting: one per pixel for the leaf scan, one per merge for the
    propagation.
    """
    touches = u.height * u.width
    areas = np.zeros(u.n_nodes, dtype=np.int64)
    leaf_areas = np.bincount(u.finest.ravel(), minlength=u.n_leaves)
    areas[: u.n_leaves] = leaf_areas
    for m in u.merges:
        areas[m.node_id] = sum(areas[c] for c in m.children)
        touches += 1
    return areas, touches


def compute_areas(u: Ucm) -> np.ndarray:
    return areas_with_touch_count(u)[0]


def compute_bboxes(u: Ucm) -> np.ndarray:
    """(n_nodes, 4) array of inclusive (min_row, min_col, max_row, max_col)."""
    h, w = u.finest.shape
    boxes = np.zeros((u.n_nodes, 4), dtype=np.int64)
    boxes[:, :2] = max(h, w)
    boxes[:, 2:] = -1
    rows, cols = np.divmod(np.arange(h * w), w)
    labels = u.finest.ravel()
    np.minimum.at(boxes[:, 0], labels, rows)
    np.minimum.at(boxes[:, 1], labels, cols)
    np.maximum.at(boxes[:, 2], labels, rows)
    np.maximum.at(boxes[:, 3], labels, cols)
    for m in u.merges:
        child_boxes = boxes[list(m.children)]
        boxes[m.node_id, :2] = child_boxes[:, :2].min(axis=0)
        boxes[m.node_id, 2:] = child_boxes[:, 2:].max(axis=0)
    return boxes


def leaf_pair_table(u: Ucm, strength_grid: np.ndarray | None = None,
                    ) -> dict[tuple[int, int], tuple[int, float]]:
    """Shared boundary between adjacent leaves: (edge count, strength sum)."""
    if strength_grid is None:
        strength_grid = ucm_strength_grid(u)
    finest = u.finest
    table: dict[tuple[int, int], list[float]] = {}
    for (a_lab, b_lab, vals) in (
        (finest[:, :-1], finest[:, 1:], grids.horizontal_edges(strength_grid)),
        (finest[:-1, :], finest[1:, :], grids.vertical_edges(strength_grid)),
    ):
        diff = a_lab != b_lab
        aa, bb, vv = a_lab[diff], b_lab[diff], vals[diff]
        lo, hi = np.minimum(aa, bb), np.maximum(aa, bb)
        for a, b, v in zip(lo.tolist(), hi.tolist(), vv.tolist()):
            st = table.setdefault((a, b), [0, 0.0])
            st[0] += 1
            st[1] += v
    return {pair: (int(st[0]), float(st[1])) for pair, st in table.items()}


def _leaf_perimeters(u: Ucm, table: dict) -> tuple[np.ndarray, np.ndarray]:
    """Leaf boundary-edge counts (image border included) and strength sums."""
    finest = u.finest
    h, w = finest.shape
    perim = np.zeros(u.n_nodes, dtype=np.int64)
    ssum = np.zeros(u.n_nodes, dtype=np.float64)
    # image border sides carry no inter-pixel strength
    border = np.bincount(finest[0, :], minlength=u.n_leaves).astype(np.int64)
    border += np.bincount(finest[-1, :], minlength=u.n_leaves)
    border += np.bincount(finest[:, 0], minlength=u.n_leaves)
    border += np.bincount(finest[:, -1], minlength=u.n_leaves)
    perim[: u.n_leaves] = border
    for (a, b), (count, strength) in table.items():
        perim[a] += count
        perim[b] += count
        ssum[a] += strength
        ssum[b] += strength
    return perim, ssum


def compute_perimeters(u: Ucm, strength_grid: np.ndarray | None = None,
                       ) -> tuple[np.ndarray, np.ndarray]:
    """Per-node perimeter (unit pixel edges against the complement, image
    border included) and boundary strength sum.

    Propagation: a merge's perimeter is the children's total minus twice the
    boundary the children share.
    """
    table = leaf_pair_table(u, strength_grid)
    perim, ssum = _leaf_perimeters(u, table)

    # live-node boundary tables, keyed by current node ids
    node_tbl: dict[int, dict[int, list[float]]] = {i: {} for i in range(u.n_leaves)}
    for (a, b), (count, strength) in table.items():
        node_tbl[a][b] = [count, strength]
        node_tbl[b][a] = [count, strength]

    for m in u.merges:
        children = list(m.children)
        child_set = set(children)
        shared_count = 0.0
        shared_strength = 0.0
        merged: dict[int, list[float]] = {}
        for c in children:
            for other, (count, strength) in node_tbl[c].items():
                if other in child_set:
                    shared_count += count       # seen from both sides
                    shared_strength += strength
                else:
                    st = merged.setdefault(other, [0.0, 0.0])
                    st[0] += count
                    st[1] += strength
        perim[m.node_id] = int(sum(perim[c] for c in children) - shared_count)
        ssum[m.node_id] = sum(ssum[c] for c in children) - shared_strength
        for c in children:
            del node_tbl[c]
        for other, st in merged.items():
            for c in children:
                node_tbl[other].pop(c, None)
            node_tbl[other][m.node_id] = st
        node_tbl[m.node_id] = merged
    return perim, ssum


def _adjacency_masks(u: Ucm, table: dict) -> tuple[list[int], list[int]]:
    """Per node: leaf-set bitmask and bitmask of leaves adjacent to it."""
    leaf_mask = [1 << i for i in range(u.n_leaves)]
    leaf_adj = [0] * u.n_leaves
    for (a, b) in table:
        leaf_adj[a] |= 1 << b
        leaf_adj[b] |= 1 << a
    node_leaves = list(leaf_mask)
    node_adj = list(leaf_adj)
    for m in u.merges:
        leaves = 0
        adj = 0
        for c in m.children:
            leaves |= node_leaves[c]
            adj |= node_adj[c]
        node_leaves.append(leaves)
        node_adj.append(adj)
    return node_leaves, node_adj


def compute_neighbors(u: Ucm, strength_floor: float = 0.0) -> list[CutAdjacency]:
    """Same-cut region adjacency, one record per cut down to the floor.

    Walks the tree from the top: the root has no neighbors; expanding a node
    hands its (adjacency-filtered) neighbors to the children, plus the
    mutually adjacent siblings, and rewrites it in the neighbor sets of the
    survivors. Cuts whose interval ends below the floor are not expanded.
    """
    table = leaf_pair_table(u, np.zeros(grids.contour_shape(u.height, u.width)))
    node_leaves, node_adj = _adjacency_masks(u, table)

    def adjacent(x: int, y: int) -> bool:
        return (node_adj[x] & node_leaves[y]) != 0

    levels = list(u.levels)
    bounds = [0.0] + levels + [math.inf]
    intervals = [
        (bounds[i], bounds[i + 1])
        for i in range(len(bounds) - 2, -1, -1)
        if bounds[i] < bounds[i + 1]
    ]

    current: dict[int, set[int]] = {u.root: set()}
    # among equal levels, a later-created merge can be the parent of an
    # earlier one; expand parents first
    merges_desc = sorted(u.merges, key=lambda m: (-m.level, -m.node_id))
    next_merge = 0
    records: list[CutAdjacency] = []
    for low, high in intervals:
        if high < strength_floor:
            break
        while next_merge < len(merges_desc) and merges_desc[next_merge].level >= high:
            m = merges_desc[next_merge]
            next_merge += 1
            inherited = current.pop(m.node_id)
            children = list(m.children)
            for c in children:
                mine = {n for n in inherited if adjacent(c, n)}
                mine |= {s for s in children if s != c and adjacent(c, s)}
                current[c] = mine
            for n in inherited:
                current[n].discard(m.node_id)
                current[n] |= {c for c in children if adjacent(n, c)}
        records.append(CutAdjacency(
            low, high, {node: frozenset(adj) for node, adj in current.items()}
        ))
    return records


@dataclass
class RegionTree:
    """Dendrogram plus per-node descriptors and the leaf-pair boundary table."""

    ucm: Ucm
    areas: np.ndarray
    bboxes: np.ndarray
    perimeters: np.ndarray
    strength_sums: np.ndarray
    leaf_table: dict[tuple[int, int], tuple[int, float]]
    leaf_sets: list[frozenset[int]]
    appear: np.ndarray
    disappear: np.ndarray
    area_touches: int = 0

    @classmethod
    def build(cls, u: Ucm, strength_grid: np.ndarray | None = None) -> "RegionTree":
        if strength_grid is None:
            strength_grid = ucm_strength_grid(u)
        areas, touches = areas_with_touch_count(u)
        table = leaf_pair_table(u, strength_grid)
        perim, ssum = compute_perimeters(u, strength_grid)
        return cls(
            ucm=u,
            areas=areas,
            bboxes=compute_bboxes(u),
            perimeters=perim,
            strength_sums=ssum,
            leaf_table=table,
            leaf_sets=u.leaf_sets(),
            appear=u.appear_levels(),
            disappear=u.disappear_levels(),
            area_touches=touches,
        )

    def shared_boundary(self, a: int, b: int) -> tuple[int, float]:
        """Edge count and strength sum shared by two disjoint nodes."""
        la, lb = self.leaf_sets[a], self.leaf_sets[b]
        if la & lb:
            raise ParameterError(f"nodes {a} and {b} overlap")
        if len(lb) < len(la):
            la, lb = lb, la
        count = 0
        strength = 0.0
        for leaf in la:
            for other in lb:
                entry = self.leaf_table.get((min(leaf, other), max(leaf, other)))
                if entry is not None:
                    count += entry[0]
                    strength += entry[1]
        return count, strength
