"""Proposal features, overlap regression, and diversified ranking.

Features come exclusively from region-tree descriptors (no mask scans). The
regressor is a bagged ensemble of variance-reduction binary trees with
per-split feature subsampling; predictions are clipped to [0, 1]. Ranking
greedily trades predicted score against mask redundancy (maximum marginal
relevance).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ParameterError
from .grouping import Proposal
from .regiontree import RegionTree

FEATURE_NAMES = (
    "area",
    "perimeter",
    "bbox_area",
    "bbox_center_x",
    "bbox_center_y",
    "bbox_aspect",
    "area_balance",
    "perimeter_per_sqrt_area",
    "strength_per_sqrt_area",
    "area_per_bbox_area",
    "boundary_strength_sum",
    "mean_boundary_strength",
    "min_appear",
    "max_appear",
    "min_disappear",
    "max_disappear",
)


def compute_features(p: Proposal, tree: RegionTree) -> np.ndarray:
    """Feature vector of a proposal, assembled from tree descriptors only."""
    u = tree.ucm
    members = list(p.node_ids)
    areas = tree.areas[members].astype(np.float64)
    area = float(areas.sum())

    perimeter = float(tree.perimeters[members].sum())
    strength = float(tree.strength_sums[members].sum())
    for i in range(len(members)):
        for j in range(i + 1, len(members)):
            shared_len, shared_strength = tree.shared_boundary(members[i], members[j])
            perimeter -= 2.0 * shared_len
            strength -= 2.0 * shared_strength

    boxes = tree.bboxes[members]
    min_row, min_col = boxes[:, 0].min(), boxes[:, 1].min()
    max_row, max_col = boxes[:, 2].max(), boxes[:, 3].max()
    box_h = float(max_row - min_row + 1)
    box_w = float(max_col - min_col + 1)
    bbox_area = box_h * box_w

    max_level = u.max_level
    appear = tree.appear[members]
    disappear = np.minimum(tree.disappear[members], max_level)  # root stays finite

    return np.array([
        area,
        perimeter,
        bbox_area,
        (min_col + max_col + 1) / 2.0 / u.width,
        (min_row + max_row + 1) / 2.0 / u.height,
        box_w / box_h,
        float(areas.min() / areas.max()),
        perimeter / math.sqrt(area),
        strength / math.sqrt(area),
        area / bbox_area,
        strength,
        strength / perimeter,
        float(appear.min()),
        float(appear.max()),
        float(disappear.min()),
        float(disappear.max()),
    ], dtype=np.float64)


# ----------------------------------------------------------------------
# Regression forest
# ----------------------------------------------------------------------

@dataclass
class ForestConfig:
    n_trees: int = 50
    max_depth: int = 12
    seed: int = 0
    min_samples_split: int = 2


def _best_split(x: np.ndarray, y: np.ndarray, features: np.ndarray
                ) -> tuple[int, float] | None:
    """Feature/threshold minimizing child SSE; None when nothing splits."""
    n = len(y)
    total = y.sum()
    total_sq = (y * y).sum()
    best = None
    best_sse = total_sq - total * total / n  # parent SSE
    for f in features:
        order = np.argsort(x[:, f], kind="stable")
        xs = x[order, f]
        ys = y[order]
        csum = np.cumsum(ys)
        csq = np.cumsum(ys * ys)
        for i in range(n - 1):
            if xs[i] == xs[i + 1]:
                continue
            left_n = i + 1
            right_n = n - left_n
            left_sse = csq[i] - csum[i] ** 2 / left_n
            right_sum = total - csum[i]
            right_sse = (total_sq - csq[i]) - right_sum ** 2 / right_n
            sse = left_sse + right_sse
            if sse < best_sse - 1e-15:
                best_sse = sse
                best = (int(f), float((xs[i] + xs[i + 1]) / 2.0))
    return best


def _grow_tree(x: np.ndarray, y: np.ndarray, rng: np.random.Generator,
               depth_left: int, min_split: int, nodes: list[dict]) -> int:
    node_id = len(nodes)
    nodes.append({})
    if np.all(y == y[0]):
        nodes[node_id] = {"value": float(y[0])}
        return node_id
    if depth_left == 0 or len(y) < min_split:
        nodes[node_id] = {"value": float(y.mean())}
        return node_id
    n_features = x.shape[1]
    subset = rng.choice(n_features, size=max(1, math.isqrt(n_features)), replace=False)
    split = _best_split(x, y, np.sort(subset))
    if split is None:
        nodes[node_id] = {"value": float(y.mean())}
        return node_id
    feature, threshold = split
    mask = x[:, feature] <= threshold
    left = _grow_tree(x[mask], y[mask], rng, depth_left - 1, min_split, nodes)
    right = _grow_tree(x[~mask], y[~mask], rng, depth_left - 1, min_split, nodes)
    nodes[node_id] = {
        "feature": feature, "threshold": threshold, "left": left, "right": right,
    }
    return node_id


def _predict_tree(nodes: list[dict], x: np.ndarray) -> float:
    node = nodes[0]
    while "value" not in node:
        if x[node["feature"]] <= node["threshold"]:
            node = nodes[node["left"]]
        else:
            node = nodes[node["right"]]
    return node["value"]


class OverlapRegressor:
    """Bagged regression trees mapping feature vectors to overlap in [0, 1]."""

    def __init__(self, trees: list[list[dict]], config: ForestConfig,
                 validation_mae: float | None = None):
        self.trees = trees
        self.config = config
        self.validation_mae = validation_mae

    def predict(self, features: np.ndarray) -> np.ndarray:
        features = np.atleast_2d(np.asarray(features, dtype=np.float64))
        out = np.zeros(features.shape[0], dtype=np.float64)
        for i, row in enumerate(features):
            votes = [_predict_tree(t, row) for t in self.trees]
            # anchored mean: a forest of identical leaves predicts exactly
            out[i] = votes[0] + sum(v - votes[0] for v in votes) / len(votes)
        return np.clip(out, 0.0, 1.0)

    def to_json(self) -> str:
        doc = {
            "config": {
                "n_trees": self.config.n_trees,
                "max_depth": self.config.max_depth,
                "seed": self.config.seed,
                "min_samples_split": self.config.min_samples_split,
            },
            "trees": self.trees,
            "validation_mae": self.validation_mae,
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "OverlapRegressor":
        doc = json.loads(text)
        cfg = ForestConfig(**doc["config"])
        return cls(doc["trees"], cfg, doc.get("validation_mae"))


def train_regressor(features: np.ndarray, targets: np.ndarray,
                    config: ForestConfig,
                    validation: tuple[np.ndarray, np.ndarray] | None = None,
                    ) -> OverlapRegressor:
    """Fit the forest on bootstrap samples; deterministic for a fixed seed.

    Single-valued targets yield a constant predictor. When a validation split
    is supplied, its mean absolute error is recorded on the regressor.
    """
    x = np.atleast_2d(np.asarray(features, dtype=np.float64))
    y = np.asarray(targets, dtype=np.float64)
    if len(y) < 1 or x.shape[0] != len(y):
        raise ParameterError("need matching, non-empty features and targets")

    trees: list[list[dict]] = []
    seeds = np.random.SeedSequence(config.seed).spawn(config.n_trees)
    for tree_seed in seeds:
        rng = np.random.default_rng(tree_seed)
        picks = rng.integers(0, len(y), size=len(y))
        nodes: list[dict] = []
        _grow_tree(x[picks], y[picks], rng, config.max_depth,
                   config.min_samples_split, nodes)
        trees.append(nodes)

    regressor = OverlapRegressor(trees, config)
    if validation is not None:
        vx, vy = validation
        predictions = regressor.predict(vx)
        regressor.validation_mae = float(np.abs(predictions - np.asarray(vy)).mean())
    return regressor


# ----------------------------------------------------------------------
# Maximum-marginal-relevance ranking
# ----------------------------------------------------------------------

def score_and_rank(pool: Sequence, scores: np.ndarray,
                   masks: Sequence[np.ndarray], mmr_lambda: float) -> list:
    """Greedy diversified ordering of a deduplicated pool.

    Repeatedly takes the item maximizing
    ``(1 - mmr_lambda) * score - mmr_lambda * max_jaccard_with_selected``;
    ties keep the original pool order. ``mmr_lambda=0`` is a pure score sort.
    """
    from .evaluation import jaccard

    if not 0.0 <= mmr_lambda <= 1.0:
        raise ParameterError(f"mmr_lambda must be in [0, 1], got {mmr_lambda}")
    scores = np.asarray(scores, dtype=np.float64)
    if len(scores) != len(pool) or len(masks) != len(pool):
        raise ParameterError("pool, scores, and masks must align")

    remaining = list(range(len(pool)))
    max_overlap = np.zeros(len(pool), dtype=np.float64)
    ordered = []
    while remaining:
        best_idx = None
        best_value = -np.inf
        for idx in remaining:
            value = (1.0 - mmr_lambda) * scores[idx] - mmr_lambda * max_overlap[idx]
            if value > best_value:
                best_value = value
                best_idx = idx
        remaining.remove(best_idx)
        ordered.append(pool[best_idx])
        if mmr_lambda > 0.0:
            for idx in remaining:
                overlap = jaccard(masks[idx], masks[best_idx])
                if overlap > max_overlap[idx]:
                    max_overlap[idx] = overlap
    return ordered
