"""Label-map and contour-grid primitives.

Conventions used throughout the package:

* A label map is an ``(H, W)`` integer array. Canonical form: labels are
  ``0..K-1`` ordered by first occurrence in a row-major scan, and every
  4-connected component of equal label is its own region.
* A contour map is a ``(2H-1, 2W-1)`` float array in ``[0, 1]``. Pixel sites
  sit at even/even coordinates (kept 0), the edge between pixels ``(y, x)``
  and ``(y, x+1)`` sits at ``(2y, 2x+1)``, and the edge between ``(y, x)``
  and ``(y+1, x)`` sits at ``(2y+1, 2x)``. Odd/odd junction sites are unused.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

FOUR_CONN = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=np.int64)

LABEL_DTYPE = np.int64


def contour_shape(height: int, width: int) -> tuple[int, int]:
    return 2 * height - 1, 2 * width - 1


def grid_shape_of_contour(cm: np.ndarray) -> tuple[int, int]:
    gh, gw = cm.shape
    if gh % 2 == 0 or gw % 2 == 0:
        raise ValueError(f"contour grid dims must be odd, got {cm.shape}")
    return (gh + 1) // 2, (gw + 1) // 2


def horizontal_edges(cm: np.ndarray) -> np.ndarray:
    """View of the (H, W-1) edges between horizontal pixel neighbours."""
    return cm[::2, 1::2]


def vertical_edges(cm: np.ndarray) -> np.ndarray:
    """View of the (H-1, W) edges between vertical pixel neighbours."""
    return cm[1::2, ::2]


def zero_contour(height: int, width: int) -> np.ndarray:
    return np.zeros(contour_shape(height, width), dtype=np.float64)


def relabel_by_first_occurrence(values: np.ndarray) -> np.ndarray:
    """Map distinct values to 0..K-1 in order of first row-major appearance."""
    flat = np.asarray(values).ravel()
    _, first_index, inverse = np.unique(flat, return_index=True, return_inverse=True)
    rank = np.argsort(np.argsort(first_index))
    return rank[inverse].reshape(np.asarray(values).shape).astype(LABEL_DTYPE)


def canonicalize(labels: np.ndarray) -> np.ndarray:
    """Relabel so every 4-connected same-label component is one region.

    New labels are assigned by first occurrence in a row-major scan, which
    makes the output independent of the input numbering.
    """
    labels = np.asarray(labels)
    if labels.ndim != 2:
        raise ValueError("label map must be 2-D")
    comp = np.zeros(labels.shape, dtype=LABEL_DTYPE)
    offset = 0
    for value in np.unique(labels):
        mask = labels == value
        piece, count = ndimage.label(mask, structure=FOUR_CONN)
        comp[mask] = piece[mask] + offset
        offset += count
    return relabel_by_first_occurrence(comp)


def is_canonical(labels: np.ndarray) -> bool:
    return bool(np.array_equal(canonicalize(labels), labels))


def boundary_grid(labels: np.ndarray) -> np.ndarray:
    """Binary contour grid marking inter-pixel edges whose labels differ."""
    labels = np.asarray(labels)
    h, w = labels.shape
    out = np.zeros(contour_shape(h, w), dtype=np.float64)
    horizontal_edges(out)[:] = labels[:, :-1] != labels[:, 1:]
    vertical_edges(out)[:] = labels[:-1, :] != labels[1:, :]
    return out


def pixel_energy(cm: np.ndarray) -> np.ndarray:
    """Per-pixel maximum of the up-to-4 incident edge strengths."""
    h, w = grid_shape_of_contour(cm)
    he = horizontal_edges(cm)
    ve = vertical_edges(cm)
    energy = np.zeros((h, w), dtype=np.float64)
    if w > 1:
        np.maximum(energy[:, :-1], he, out=energy[:, :-1])
        np.maximum(energy[:, 1:], he, out=energy[:, 1:])
    if h > 1:
        np.maximum(energy[:-1, :], ve, out=energy[:-1, :])
        np.maximum(energy[1:, :], ve, out=energy[1:, :])
    return energy


def nearest_source_rows(n_src: int, n_dst: int) -> np.ndarray:
    """Pixel-center nearest-neighbour index map from a dst axis into a src axis.

    Destination pixel centre ``(i + 0.5) * n_src / n_dst`` falls inside source
    cell ``floor(centre)``; exact cell boundaries round up, i.e. round-half-up
    of ``i*r - 0.5 + 0.5*r`` with ``r = n_src / n_dst``.
    """
    centers = (np.arange(n_dst, dtype=np.float64) + 0.5) * (n_src / n_dst)
    idx = np.floor(centers).astype(np.int64)
    return np.clip(idx, 0, n_src - 1)
