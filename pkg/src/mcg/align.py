"""Cross-resolution projection of partitions and hierarchies.

Aligning snaps a hierarchy's boundaries onto a target superpixel partition:
every level is sampled, rescaled, relabeled to the majority label it receives,
and the surviving boundaries accumulate the level's strength. The projected
family is nested by construction, so the result is again a hierarchy whose
regions never split a target superpixel.
"""

from __future__ import annotations

import numpy as np

from . import grids
from .errors import ParameterError
from .hierarchy import Ucm, sample_hierarchy, ucm_from_strength_grid, ucm_strength_grid


def project(r: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Relabel every region of `s` with the most frequent label of `r` on it.

    Ties go to the smaller `r` label; the output is canonical.
    """
    r = np.asarray(r)
    s = np.asarray(s)
    if r.shape != s.shape:
        raise ParameterError(f"label map dims differ: {r.shape} vs {s.shape}")
    r_flat = r.ravel().astype(np.int64)
    s_flat = s.ravel().astype(np.int64)
    base = int(r_flat.max()) + 1
    keys, counts = np.unique(s_flat * base + r_flat, return_counts=True)
    s_ids = keys // base
    r_ids = keys % base
    order = np.lexsort((r_ids, -counts, s_ids))
    s_sorted = s_ids[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = s_sorted[1:] != s_sorted[:-1]
    winners = np.zeros(int(s_flat.max()) + 1, dtype=np.int64)
    winners[s_sorted[first]] = r_ids[order][first]
    return grids.canonicalize(winners[s])


def rescale_segmentation(s: np.ndarray, target_dims: tuple[int, int]) -> np.ndarray:
    """Pixel-centre nearest-neighbour resampling of a label map."""
    s = np.asarray(s)
    ht, wt = target_dims
    if ht < 1 or wt < 1:
        raise ParameterError(f"target dims must be >= 1x1, got {target_dims}")
    rows = grids.nearest_source_rows(s.shape[0], ht)
    cols = grids.nearest_source_rows(s.shape[1], wt)
    return grids.canonicalize(s[rows[:, None], cols[None, :]])


def align_ucm(u: Ucm, target_superpixels: np.ndarray) -> Ucm:
    """Project a hierarchy onto a target superpixel partition.

    For each strength level (ascending) the partition just below it is
    sampled, rescaled to the target grid, projected onto the superpixels, and
    its boundary accumulates the level via a running max. The accumulated
    grid is then re-expressed as a hierarchy over the target superpixels.
    """
    target_superpixels = np.asarray(target_superpixels, dtype=grids.LABEL_DTYPE)
    if not grids.is_canonical(target_superpixels):
        raise ParameterError("target superpixels must be canonical")
    target_dims = target_superpixels.shape
    accumulated = np.zeros(grids.contour_shape(*target_dims), dtype=np.float64)
    for t in u.levels:
        part = sample_hierarchy(u, t, inclusive=False)
        part = rescale_segmentation(part, target_dims)
        part = project(part, target_superpixels)
        contours = grids.boundary_grid(part)
        np.maximum(accumulated, t * contours, out=accumulated)
    return ucm_from_strength_grid(accumulated, finest=target_superpixels)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def multiscale_combine(
    aligned: list[Ucm],
    weights: list[float],
    calibration: tuple[float, float] | None = None,
) -> Ucm:
    """Blend aligned hierarchies sharing one finest partition.

    Per boundary location the combined strength is the weighted mean of the
    input strengths, optionally passed through a sigmoid `1/(1+exp(-(a*x+b)))`
    when calibration constants are supplied. The merge tree is rebuilt over
    the shared finest partition.
    """
    if not aligned:
        raise ParameterError("need at least one aligned hierarchy")
    finest = aligned[0].finest
    for other in aligned[1:]:
        if not np.array_equal(other.finest, finest):
            raise ParameterError("aligned hierarchies must share the finest partition")
    weights_arr = np.asarray(weights, dtype=np.float64)
    if weights_arr.shape != (len(aligned),):
        raise ParameterError("need one weight per hierarchy")
    if abs(weights_arr.sum() - 1.0) > 1e-9:
        raise ParameterError(f"weights must sum to 1, got {weights_arr.sum()}")

    # anchored form of the weighted mean: identical inputs combine exactly
    base = ucm_strength_grid(aligned[0])
    combined = base.copy()
    for w, u in zip(weights_arr[1:], aligned[1:]):
        combined += w * (ucm_strength_grid(u) - base)
    if calibration is not None:
        a, b = calibration
        boundary = grids.boundary_grid(finest) > 0
        combined[boundary] = _sigmoid(a * combined[boundary] + b)
    return ucm_from_strength_grid(combined, finest=finest)
