"""End-to-end orchestration: image pyramid, per-scale segmentation,
alignment, proposal pooling, learning, and evaluation glue.

The CLI is a thin wrapper over these functions so tests can drive the same
paths in memory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import grids
from .affinity import build_affinity, local_contour_cue
from .align import align_ucm, multiscale_combine
from .config import PipelineConfig
from .dncuts import dncuts, spectral_gradients
from .errors import ParameterError
from .evaluation import jaccard
from .grouping import (Proposal, RankedList, dedup, enumerate_tuples,
                       floor_for_budget, proposal_mask)
from .hierarchy import Ucm, build_ucm, finest_partition
from .pareto import (FrontParams, ParetoPoint, combine_at, greedy_front_combine,
                     overlap_table, select_working_point)
from .ranking import (ForestConfig, OverlapRegressor, compute_features,
                      score_and_rank, train_regressor)
from .regiontree import RegionTree


def scale_dims(height: int, width: int, scale: float) -> tuple[int, int]:
    return (max(1, int(math.floor(height * scale + 0.5))),
            max(1, int(math.floor(width * scale + 0.5))))


def resample_image(img: np.ndarray, target_dims: tuple[int, int]) -> np.ndarray:
    """Bilinear image resampling with pixel-centre alignment."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        img = img[:, :, None]
    h, w, _ = img.shape
    ht, wt = target_dims
    sy = np.clip((np.arange(ht) + 0.5) * h / ht - 0.5, 0, h - 1)
    sx = np.clip((np.arange(wt) + 0.5) * w / wt - 0.5, 0, w - 1)
    y0 = np.floor(sy).astype(np.int64)
    x0 = np.floor(sx).astype(np.int64)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (sy - y0)[:, None, None]
    fx = (sx - x0)[None, :, None]
    top = img[y0][:, x0] * (1 - fx) + img[y0][:, x1] * fx
    bottom = img[y1][:, x0] * (1 - fx) + img[y1][:, x1] * fx
    return top * (1 - fy) + bottom * fy


def rescale_mask(mask: np.ndarray, target_dims: tuple[int, int]) -> np.ndarray:
    """Nearest-neighbour resampling of a binary mask."""
    if mask.shape == tuple(target_dims):
        return mask
    rows = grids.nearest_source_rows(mask.shape[0], target_dims[0])
    cols = grids.nearest_source_rows(mask.shape[1], target_dims[1])
    return mask[rows[:, None], cols[None, :]]


def scale_stem(scale: float) -> str:
    return f"scale_{scale:g}"


def single_scale_ucm(img: np.ndarray, cfg: PipelineConfig,
                     local_cue: np.ndarray | None = None) -> Ucm:
    """Contour cue, spectral globalization, watershed, and agglomeration.

    A precomputed contour map may replace the built-in half-disk cue.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        img = img[:, :, None]
    h, w = img.shape[:2]
    if local_cue is not None:
        if local_cue.shape != grids.contour_shape(h, w):
            raise ParameterError(
                f"supplied contour map {local_cue.shape} does not fit a "
                f"{h}x{w} image"
            )
        cue = np.asarray(local_cue, dtype=np.float64)
    else:
        radii = [r for r in cfg.cue_radii if r <= min(h, w)] or [1]
        cue = local_contour_cue(img, radii)

    spectral = np.zeros_like(cue)
    if h * w >= 2:
        d = cfg.dncuts_d
        while d > 0:
            dh, dw = h, w
            for _ in range(d):
                dh, dw = (dh + 1) // 2, (dw + 1) // 2
            if dh * dw >= 2:
                break
            d -= 1
        dh, dw = h, w
        for _ in range(d):
            dh, dw = (dh + 1) // 2, (dw + 1) // 2
        k = min(cfg.dncuts_k, dh * dw - 1)
        if k >= 1:
            affinity = build_affinity(cue, cfg.affinity_radius, cfg.affinity_sigma)
            basis = dncuts(affinity, d, k, (h, w), seed=cfg.seed)
            spectral = spectral_gradients(basis, (h, w), np.ones(k))

    combined = np.clip(
        cfg.cue_weight_local * cue + cfg.cue_weight_spectral * spectral, 0.0, 1.0
    )
    finest = finest_partition(combined)
    return build_ucm(finest, combined)


def segment_hierarchies(img: np.ndarray, cfg: PipelineConfig,
                        local_cue: np.ndarray | None = None) -> dict[str, Ucm]:
    """Per-scale hierarchies aligned to the highest-resolution superpixels,
    plus their multiscale combination; keyed by stem, sorted.

    A precomputed contour map can stand in for the built-in cue; it only fits
    the scale whose dims match the input image, so it requires scales == (1,).
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        img = img[:, :, None]
    h, w = img.shape[:2]
    if local_cue is not None and tuple(cfg.scales) != (1.0,):
        raise ParameterError(
            "a supplied contour map fixes the resolution; use scales = [1]"
        )

    per_scale: list[tuple[str, Ucm]] = []
    for scale in cfg.scales:
        dims = scale_dims(h, w, scale)
        scaled = img if dims == (h, w) else resample_image(img, dims)
        per_scale.append(
            (scale_stem(scale), single_scale_ucm(scaled, cfg, local_cue))
        )

    aligned: list[tuple[str, Ucm]] = []
    for i, (stem, u) in enumerate(per_scale):
        current = u
        for j in range(i + 1, len(per_scale)):
            current = align_ucm(current, per_scale[j][1].finest)
        if i == len(per_scale) - 1:
            current = align_ucm(current, u.finest)
        aligned.append((stem, current))

    weights = [1.0 / len(aligned)] * len(aligned)
    multiscale = multiscale_combine(
        [u for _, u in aligned], weights, calibration=cfg.calibration
    )
    out = dict(aligned)
    out["multiscale"] = multiscale
    return {stem: out[stem] for stem in sorted(out)}


@dataclass
class HierarchySet:
    """Hierarchies in a fixed order; proposals reference them by index."""

    stems: tuple[str, ...]
    hierarchies: tuple[Ucm, ...]

    @classmethod
    def from_dict(cls, by_stem: dict[str, Ucm]) -> "HierarchySet":
        stems = tuple(sorted(by_stem))
        return cls(stems, tuple(by_stem[s] for s in stems))

    def __len__(self) -> int:
        return len(self.hierarchies)

    def tree(self, idx: int) -> RegionTree:
        if not hasattr(self, "_trees"):
            self._trees: dict[int, RegionTree] = {}
        if idx not in self._trees:
            self._trees[idx] = RegionTree.build(self.hierarchies[idx])
        return self._trees[idx]


def ranked_lists(hset: HierarchySet, cfg: PipelineConfig
                 ) -> list[tuple[str, RankedList]]:
    """All ranked lists in fold order: tuple sizes outer, hierarchies inner."""
    per_h: list[list[RankedList]] = []
    for idx, u in enumerate(hset.hierarchies):
        floor = floor_for_budget(u, cfg.node_budget)
        per_h.append(enumerate_tuples(u, cfg.max_tuple, floor, hierarchy_id=idx))
    ordered: list[tuple[str, RankedList]] = []
    for size in range(1, cfg.max_tuple + 1):
        for stem, lists in zip(hset.stems, per_h):
            rl = lists[size - 1]
            ordered.append((f"{stem}/{rl.list_id}", rl))
    return ordered


def propose_pool(hset: HierarchySet, cfg: PipelineConfig,
                 params: dict[str, int] | None = None) -> list[Proposal]:
    """Combine ranked lists (all of them, or the learnt per-list counts) and
    remove duplicates."""
    lists = ranked_lists(hset, cfg)
    if params is None:
        counts = [len(rl.proposals) for _, rl in lists]
    else:
        known = {list_id for list_id, _ in lists}
        missing = set(params) - known
        if missing:
            raise ParameterError(f"params reference unknown lists: {sorted(missing)}")
        counts = [min(params.get(list_id, 0), len(rl.proposals))
                  for list_id, rl in lists]
    return combine_at(
        counts,
        [rl.proposals for _, rl in lists],
        mask_of=lambda p: proposal_mask(p, hset.hierarchies[p.hierarchy_id]),
        j_threshold=cfg.dedup_threshold,
    )


def rank_pool(pool: list[Proposal], hset: HierarchySet,
              regressor: OverlapRegressor | None, cfg: PipelineConfig
              ) -> tuple[list[Proposal], list[float] | None]:
    """Order the pool by regressed score with MMR diversification.

    Without a regressor the pool keeps its combined order and no scores are
    reported.
    """
    if regressor is None or not pool:
        return list(pool), None
    features = np.stack([
        compute_features(p, hset.tree(p.hierarchy_id)) for p in pool
    ])
    scores = regressor.predict(features)
    masks = [proposal_mask(p, hset.hierarchies[p.hierarchy_id]) for p in pool]
    order_idx = score_and_rank(list(range(len(pool))), scores, masks, cfg.mmr_lambda)
    ordered = [pool[i] for i in order_idx]
    ordered_scores = [float(scores[i]) for i in order_idx]
    return ordered, ordered_scores


def pool_masks(pool: list[Proposal], hset: HierarchySet,
               target_dims: tuple[int, int]) -> list[np.ndarray]:
    return [
        rescale_mask(proposal_mask(p, hset.hierarchies[p.hierarchy_id]), target_dims)
        for p in pool
    ]


@dataclass
class LearnResult:
    params: FrontParams
    regressor: OverlapRegressor
    front: list[ParetoPoint]
    quality_evaluations: int


def learn_from_corpus(images: list[np.ndarray], gts: list[np.ndarray],
                      cfg: PipelineConfig) -> LearnResult:
    """Pareto-learn per-list counts, then train the overlap regressor."""
    if not images or len(images) != len(gts):
        raise ParameterError("need matching, non-empty image and gt lists")
    hsets: list[HierarchySet] = []
    for img, gt in zip(images, gts):
        if img.shape[:2] != gt.shape:
            raise ParameterError(
                f"image dims {img.shape[:2]} do not match gt dims {gt.shape}"
            )
        hsets.append(HierarchySet.from_dict(segment_hierarchies(img, cfg)))

    list_ids = [list_id for list_id, _ in ranked_lists(hsets[0], cfg)]
    per_image_lists = [ranked_lists(h, cfg) for h in hsets]

    overlap_lists = []
    for list_idx in range(len(list_ids)):
        tables = []
        for img_idx, lists in enumerate(per_image_lists):
            _, rl = lists[list_idx]
            masks = pool_masks(rl.proposals, hsets[img_idx], gts[img_idx].shape)
            tables.append(overlap_table(masks, gts[img_idx]))
        overlap_lists.append(tables)

    front, evaluations = greedy_front_combine(overlap_lists, cfg.s_samples)
    params = select_working_point(front, max_proposals=cfg.front_target_proposals)
    params.list_ids = tuple(list_ids)

    features_rows = []
    targets = []
    for img_idx, lists in enumerate(per_image_lists):
        counts = [min(n, len(rl.proposals))
                  for n, (_, rl) in zip(params.counts, lists)]
        pool = combine_at(
            counts,
            [rl.proposals for _, rl in lists],
            mask_of=lambda p, h=hsets[img_idx]: proposal_mask(
                p, h.hierarchies[p.hierarchy_id]),
            j_threshold=cfg.dedup_threshold,
        )
        gt = gts[img_idx]
        instance_masks = [gt == i for i in range(1, int(gt.max()) + 1)]
        for p in pool:
            features_rows.append(compute_features(p, hsets[img_idx].tree(p.hierarchy_id)))
            mask = rescale_mask(
                proposal_mask(p, hsets[img_idx].hierarchies[p.hierarchy_id]), gt.shape
            )
            best = max((jaccard(mask, im) for im in instance_masks), default=0.0)
            targets.append(best)

    x = np.stack(features_rows) if features_rows else np.zeros((0, 16))
    y = np.asarray(targets, dtype=np.float64)
    if len(y) == 0:
        raise ParameterError("no training rows: the combined pools are empty")
    forest_cfg = ForestConfig(cfg.forest_trees, cfg.forest_depth, cfg.seed)
    regressor = train_regressor(x, y, forest_cfg)
    half = len(y) // 2
    if half >= 2 and len(y) - half >= 2:
        held_out = train_regressor(x[:half], y[:half], forest_cfg,
                                   validation=(x[half:], y[half:]))
        regressor.validation_mae = held_out.validation_mae
    return LearnResult(params, regressor, front, evaluations)


def proposal_boxes(pool_records: list[dict], hset: HierarchySet
                   ) -> list[tuple[int, int, int, int]]:
    """Inclusive bounding boxes per proposal record, exact duplicates dropped
    (first occurrence wins)."""
    from .regiontree import compute_bboxes

    box_cache: dict[int, np.ndarray] = {}
    seen: set[tuple[int, int, int, int]] = set()
    out = []
    for rec in pool_records:
        idx = int(rec["hierarchy"])
        if idx not in box_cache:
            box_cache[idx] = compute_bboxes(hset.hierarchies[idx])
        boxes = box_cache[idx][[int(n) for n in rec["nodes"]]]
        box = (int(boxes[:, 0].min()), int(boxes[:, 1].min()),
               int(boxes[:, 2].max()), int(boxes[:, 3].max()))
        if box not in seen:
            seen.add(box)
            out.append(box)
    return out
