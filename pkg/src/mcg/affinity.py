"""Local contour cue and sparse intervening-contour pixel affinities.

The cue is a half-disk mean-difference detector: the strength of each
inter-pixel edge is the largest absolute difference between the mean
intensities of the two half-disks straddling it, over a set of radii and all
channels. Precomputed contour maps can be supplied instead (see fileio).
"""

from __future__ import annotations

import numpy as np
from scipy import sparse

from . import grids
from .errors import ParameterError


def _half_disk_offsets(radius: int) -> list[tuple[int, int]]:
    """Offsets (dy, dx), dx <= 0, of the half-disk left of a vertical edge.

    Anchored at the pixel immediately left of the edge; the edge centre sits
    at (0, +0.5) in these coordinates. The opposite half-disk is the mirror
    (dy, 1 - dx).
    """
    offsets = []
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, 1):
            if dy * dy + (dx - 0.5) ** 2 <= radius * radius:
                offsets.append((dy, dx))
    return offsets


def _shifted_mean(data: np.ndarray, offsets: list[tuple[int, int]]) -> np.ndarray:
    """Mean of data over the offset set for each horizontal-neighbour edge
    anchor (y, x), x in 0..W-2, with out-of-image pixels dropped."""
    h, w = data.shape
    total = np.zeros((h, w - 1), dtype=np.float64)
    count = np.zeros((h, w - 1), dtype=np.float64)
    for dy, dx in offsets:
        y0, y1 = max(0, -dy), min(h, h - dy)
        x0, x1 = max(0, -dx), min(w - 1, w - dx)
        if y0 >= y1 or x0 >= x1:
            continue
        total[y0:y1, x0:x1] += data[y0 + dy:y1 + dy, x0 + dx:x1 + dx]
        count[y0:y1, x0:x1] += 1.0
    count[count == 0] = 1.0
    return total / count


def local_contour_cue(img: np.ndarray, half_disk_radii: list[int]) -> np.ndarray:
    """Contour map from oriented half-disk mean differences.

    Border edges use shrunken disks (out-of-image samples are dropped).
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        img = img[:, :, None]
    h, w, _ = img.shape
    if not half_disk_radii:
        raise ParameterError("need at least one half-disk radius")
    for r in half_disk_radii:
        if r < 1:
            raise ParameterError(f"half-disk radius must be >= 1, got {r}")
        if r > min(h, w):
            raise ParameterError(
                f"half-disk radius {r} exceeds min image dim {min(h, w)}"
            )

    cm = grids.zero_contour(h, w)
    h_edges = grids.horizontal_edges(cm)
    v_edges = grids.vertical_edges(cm)
    for radius in half_disk_radii:
        near = _half_disk_offsets(radius)
        far = [(dy, 1 - dx) for dy, dx in near]
        for channel in range(img.shape[2]):
            plane = img[:, :, channel]
            diff = np.abs(_shifted_mean(plane, near) - _shifted_mean(plane, far))
            np.maximum(h_edges, diff, out=h_edges)
            # vertical-neighbour edges via the transposed image
            diff_t = np.abs(
                _shifted_mean(plane.T, near) - _shifted_mean(plane.T, far)
            ).T
            np.maximum(v_edges, diff_t, out=v_edges)
    cm[cm < 1e-12] = 0.0  # rounding dust from shrunken border disks
    np.clip(cm, 0.0, 1.0, out=cm)
    return cm


def _fill_junctions(cm: np.ndarray) -> np.ndarray:
    """Copy of the contour grid with odd/odd junction sites set to the max of
    their incident edge sites, so diagonal crossing lines see the contour."""
    filled = np.array(cm, dtype=np.float64, copy=True)
    gh, gw = filled.shape
    if gh < 3 or gw < 3:
        return filled
    junction = filled[1::2, 1::2]
    np.maximum(junction, cm[1::2, 0:-1:2], out=junction)   # left edges
    np.maximum(junction, cm[1::2, 2::2], out=junction)     # right edges
    np.maximum(junction, cm[0:-1:2, 1::2], out=junction)   # up edges
    np.maximum(junction, cm[2::2, 1::2], out=junction)     # down edges
    return filled


def _bresenham(p0: tuple[int, int], p1: tuple[int, int]) -> list[tuple[int, int]]:
    """All integer lattice points of the classic Bresenham line, inclusive."""
    y0, x0 = p0
    y1, x1 = p1
    points = []
    dy = abs(y1 - y0)
    dx = abs(x1 - x0)
    sy = 1 if y1 >= y0 else -1
    sx = 1 if x1 >= x0 else -1
    err = dx - dy
    y, x = y0, x0
    while True:
        points.append((y, x))
        if (y, x) == (y1, x1):
            break
        e2 = 2 * err
        if e2 > -dy:
            err -= dy
            x += sx
        if e2 < dx:
            err += dx
            y += sy
    return points


def build_affinity(cm: np.ndarray, radius: int, sigma: float) -> sparse.csr_matrix:
    """Intervening-contour affinities for pixel pairs within Chebyshev
    distance `radius`: weight = exp(-max contour strength on the line / sigma).

    The output is exactly symmetric (each unordered pair is computed once) and
    carries a unit diagonal.
    """
    if sigma <= 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    if radius < 1:
        raise ParameterError(f"radius must be >= 1, got {radius}")
    h, w = grids.grid_shape_of_contour(np.asarray(cm))
    n = h * w
    filled = _fill_junctions(np.asarray(cm, dtype=np.float64))

    rows: list[np.ndarray] = [np.arange(n, dtype=np.int64)]
    cols: list[np.ndarray] = [np.arange(n, dtype=np.int64)]
    vals: list[np.ndarray] = [np.ones(n, dtype=np.float64)]

    for dy in range(0, radius + 1):
        for dx in range(-radius, radius + 1):
            if (dy, dx) <= (0, 0):
                continue
            # anchors (y, x) paired with (y+dy, x+dx); valid ranges:
            y0, y1 = 0, h - dy
            x0, x1 = max(0, -dx), min(w, w - dx)
            if y0 >= y1 or x0 >= x1:
                continue
            inner = _bresenham((0, 0), (2 * dy, 2 * dx))[1:-1]
            block_shape = (y1 - y0, x1 - x0)
            line_max = np.zeros(block_shape, dtype=np.float64)
            for oy, ox in inner:
                gy0 = 2 * y0 + oy
                gx0 = 2 * x0 + ox
                seg = filled[gy0:gy0 + 2 * block_shape[0]:2,
                             gx0:gx0 + 2 * block_shape[1]:2]
                np.maximum(line_max, seg, out=line_max)
            weight = np.exp(-line_max / sigma).ravel()
            yy, xx = np.mgrid[y0:y1, x0:x1]
            src = (yy * w + xx).ravel()
            dst = ((yy + dy) * w + (xx + dx)).ravel()
            rows.append(src)
            cols.append(dst)
            vals.append(weight)
            rows.append(dst)
            cols.append(src)
            vals.append(weight)

    mat = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )
    return mat.tocsr()
