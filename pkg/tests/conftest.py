import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mcg import grids
from mcg.hierarchy import Merge, Ucm, build_ucm, finest_partition


@pytest.fixture
def fix_a_image() -> np.ndarray:
    """4x4 grayscale step: columns 0-1 black, columns 2-3 white."""
    img = np.zeros((4, 4, 1))
    img[:, 2:] = 1.0
    return img


@pytest.fixture
def fix_a_contour() -> np.ndarray:
    """Step contour map: strength 1.0 on the vertical edges between columns 1|2."""
    cm = grids.zero_contour(4, 4)
    grids.horizontal_edges(cm)[:, 1] = 1.0
    return cm


@pytest.fixture
def fix_b_contour() -> np.ndarray:
    """Four 4x1 column regions with inter-column strengths 0.2, 0.9, 0.4."""
    cm = grids.zero_contour(4, 4)
    grids.horizontal_edges(cm)[:, 0] = 0.2
    grids.horizontal_edges(cm)[:, 1] = 0.9
    grids.horizontal_edges(cm)[:, 2] = 0.4
    return cm


@pytest.fixture
def fix_b_finest() -> np.ndarray:
    return np.tile(np.arange(4), (4, 1)).astype(grids.LABEL_DTYPE)


@pytest.fixture
def fix_b(fix_b_finest, fix_b_contour) -> Ucm:
    """The column dendrogram: e=(a,b)@0.2, f=(c,d)@0.4, root=(e,f)@0.9."""
    return build_ucm(fix_b_finest, fix_b_contour)


def random_contour(rng: np.random.Generator, h: int, w: int,
                   smooth: bool = False) -> np.ndarray:
    """Random contour map; `smooth` draws a few strong step edges instead of
    i.i.d. noise (closer to real boundary maps)."""
    cm = grids.zero_contour(h, w)
    if smooth:
        for _ in range(rng.integers(1, 4)):
            if rng.random() < 0.5 and w > 1:
                col = int(rng.integers(0, w - 1))
                grids.horizontal_edges(cm)[:, col] = rng.uniform(0.5, 1.0)
            elif h > 1:
                row = int(rng.integers(0, h - 1))
                grids.vertical_edges(cm)[row, :] = rng.uniform(0.5, 1.0)
        grids.horizontal_edges(cm)[:] += rng.uniform(0, 0.05, (h, w - 1))
        grids.vertical_edges(cm)[:] += rng.uniform(0, 0.05, (h - 1, w))
        np.clip(cm, 0, 1, out=cm)
    else:
        grids.horizontal_edges(cm)[:] = rng.random((h, w - 1))
        grids.vertical_edges(cm)[:] = rng.random((h - 1, w))
    return cm


def random_ucm(rng: np.random.Generator, h: int, w: int,
               quantize: int = 0) -> Ucm:
    """Watershed + agglomeration over a random contour map.

    `quantize` > 0 rounds strengths to that many levels, which produces
    repeated merge strengths (useful for tie-handling coverage).
    """
    cm = random_contour(rng, h, w)
    if quantize:
        cm = np.round(cm * quantize) / quantize
    finest = finest_partition(cm)
    return build_ucm(finest, cm)


def random_labelmap(rng: np.random.Generator, h: int, w: int,
                    n_labels: int) -> np.ndarray:
    return grids.canonicalize(rng.integers(0, n_labels, size=(h, w)))


def nine_cell_contour(rng: np.random.Generator, h: int, w: int) -> np.ndarray:
    """2 vertical + 2 horizontal strong ridges -> 9 cells.

    The normalized Laplacian then has 9 cell modes followed by within-cell
    modes, i.e. a spectral gap right after eigenvector 9 -- the configuration
    whose 8-vector subspace (past the trivial one) is well conditioned.
    """
    cm = grids.zero_contour(h, w)
    margin = max(2, min(h, w) // 5)
    c1 = int(rng.integers(margin, w // 2 - 2))
    c2 = int(rng.integers(w // 2 + 2, w - margin))
    r1 = int(rng.integers(margin, h // 2 - 2))
    r2 = int(rng.integers(h // 2 + 2, h - margin))
    strengths = rng.uniform(0.75, 1.0, size=4)
    grids.horizontal_edges(cm)[:, c1] = strengths[0]
    grids.horizontal_edges(cm)[:, c2] = strengths[1]
    grids.vertical_edges(cm)[r1, :] = strengths[2]
    grids.vertical_edges(cm)[r2, :] = strengths[3]
    grids.horizontal_edges(cm)[:] += rng.uniform(0, 0.02, (h, w - 1))
    grids.vertical_edges(cm)[:] += rng.uniform(0, 0.02, (h - 1, w))
    return np.clip(cm, 0, 1)


def layered_ridge_contour(rng: np.random.Generator, h: int, w: int,
                          n_ridges: int = 6) -> np.ndarray:
    """Full-length ridges at geometrically decaying strengths: one dominant
    cut, so the Fiedler vector's sign partition is stable."""
    cm = grids.zero_contour(h, w)
    strengths = 0.72 ** np.arange(n_ridges)
    cols = rng.choice(w - 1, size=min(n_ridges, w - 1), replace=False)
    rows = rng.choice(h - 1, size=min(n_ridges, h - 1), replace=False)
    for i in range(min(n_ridges, len(cols), len(rows))):
        if rng.random() < 0.5:
            edge = grids.horizontal_edges(cm)[:, cols[i]]
            np.maximum(edge, strengths[i], out=edge)
        else:
            edge = grids.vertical_edges(cm)[rows[i], :]
            np.maximum(edge, strengths[i], out=edge)
    grids.horizontal_edges(cm)[:] += rng.uniform(0, 0.02, (h, w - 1))
    grids.vertical_edges(cm)[:] += rng.uniform(0, 0.02, (h - 1, w))
    return np.clip(cm, 0, 1)


def rectangles_image(rng: np.random.Generator, size: int = 64
                     ) -> tuple[np.ndarray, np.ndarray]:
    """Color image of 2-3 non-overlapping axis-aligned rectangles on a
    contrasting background, plus its instance ground truth."""
    palette = np.array([
        [0.95, 0.15, 0.1],
        [0.1, 0.2, 0.95],
        [0.1, 0.85, 0.2],
        [0.95, 0.9, 0.1],
        [0.85, 0.1, 0.9],
    ])
    background = np.array([0.5, 0.5, 0.5])
    img = np.tile(background, (size, size, 1))
    gt = np.zeros((size, size), dtype=np.int64)
    n_rects = int(rng.integers(2, 4))
    colors = rng.permutation(len(palette))[:n_rects]
    placed = 0
    attempts = 0
    while placed < n_rects and attempts < 200:
        attempts += 1
        rh = int(rng.integers(10, size // 2))
        rw = int(rng.integers(10, size // 2))
        y0 = int(rng.integers(2, size - rh - 2))
        x0 = int(rng.integers(2, size - rw - 2))
        region = (slice(y0, y0 + rh), slice(x0, x0 + rw))
        pad = (slice(max(0, y0 - 2), y0 + rh + 2), slice(max(0, x0 - 2), x0 + rw + 2))
        if np.any(gt[pad] != 0):
            continue
        placed += 1
        gt[region] = placed
        img[region] = palette[colors[placed - 1]]
    return img, gt
