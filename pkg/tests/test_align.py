import numpy as np
import pytest

from mcg import grids
from mcg.align import align_ucm, multiscale_combine, project, rescale_segmentation
from mcg.errors import ParameterError
from mcg.hierarchy import (Merge, Ucm, build_ucm, sample_hierarchy,
                           ucm_strength_grid)

from conftest import random_contour, random_labelmap, random_ucm
from oracles import mode_project, nearest_neighbor_rescale


def test_project_self_is_identity_up_to_canonical():
    rng = np.random.default_rng(0)
    s = random_labelmap(rng, 5, 6, 4)
    assert np.array_equal(project(s, s), grids.canonicalize(s))


def test_project_quadrants_onto_halves():
    r = np.zeros((4, 4), dtype=int)
    r[:, 2:] = 1
    s = np.zeros((4, 4), dtype=int)
    s[:2, 2:] = 1
    s[2:, :2] = 2
    s[2:, 2:] = 3
    assert np.array_equal(project(r, s), r)


def test_project_matches_tally_oracle():
    rng = np.random.default_rng(1)
    for _ in range(20):
        r = random_labelmap(rng, 8, 8, 5)
        s = random_labelmap(rng, 8, 8, 4)
        assert np.array_equal(project(r, s), mode_project(r, s))


def test_project_idempotent():
    rng = np.random.default_rng(2)
    for _ in range(20):
        r = random_labelmap(rng, 7, 6, 4)
        s = random_labelmap(rng, 7, 6, 3)
        once = project(r, s)
        assert np.array_equal(project(once, s), once)


def test_project_dim_mismatch():
    with pytest.raises(ParameterError):
        project(np.zeros((3, 3), int), np.zeros((4, 4), int))


def test_rescale_identity():
    rng = np.random.default_rng(3)
    s = random_labelmap(rng, 5, 7, 4)
    assert np.array_equal(rescale_segmentation(s, (5, 7)), grids.canonicalize(s))


def test_rescale_double_fills_blocks():
    s = np.array([[0, 1], [2, 3]])
    out = rescale_segmentation(s, (4, 4))
    expected = np.array([
        [0, 0, 1, 1],
        [0, 0, 1, 1],
        [2, 2, 3, 3],
        [2, 2, 3, 3],
    ])
    assert np.array_equal(out, expected)


def test_rescale_matches_nearest_center_oracle():
    rng = np.random.default_rng(4)
    for dims in ((4, 4), (5, 3), (2, 7)):
        s = random_labelmap(rng, 3, 3, 3)
        assert np.array_equal(
            rescale_segmentation(s, dims), nearest_neighbor_rescale(s, dims)
        )


def test_align_identity_on_own_superpixels(fix_b):
    aligned = align_ucm(fix_b, fix_b.finest)
    assert np.array_equal(ucm_strength_grid(aligned), ucm_strength_grid(fix_b))


def test_align_snaps_half_resolution_boundary():
    half = Ucm(np.array([[0, 1], [0, 1]]), (Merge(2, (0, 1), 0.7),))
    target = np.tile(np.arange(4), (4, 1)).astype(np.int64)
    aligned = align_ucm(half, target)
    grid = ucm_strength_grid(aligned)
    h = grids.horizontal_edges(grid)
    assert np.all(h[:, 1] == 0.7)      # snapped onto a target column edge
    assert np.all(h[:, [0, 2]] == 0)
    assert np.all(grids.vertical_edges(grid) == 0)


def test_align_never_splits_target_superpixels():
    rng = np.random.default_rng(5)
    for _ in range(10):
        u = random_ucm(rng, 6, 6)
        target = random_labelmap(rng, 8, 9, 6)
        aligned = align_ucm(u, target)
        assert np.array_equal(aligned.finest, target)
        for t in (0.0,) + aligned.levels:
            part = sample_hierarchy(aligned, t)
            for sp in range(target.max() + 1):
                assert len(np.unique(part[target == sp])) == 1


def test_align_levels_never_increase():
    rng = np.random.default_rng(6)
    for _ in range(10):
        u = random_ucm(rng, 6, 6)
        target = random_labelmap(rng, 6, 6, 5)
        aligned = align_ucm(u, target)
        assert len(set(m.level for m in aligned.merges) - {0.0}) <= len(u.levels)


def test_multiscale_identity(fix_b):
    combined = multiscale_combine([fix_b] * 3, [1 / 3] * 3)
    assert np.array_equal(ucm_strength_grid(combined), ucm_strength_grid(fix_b))


def test_multiscale_single_input_weight_one(fix_b):
    combined = multiscale_combine([fix_b], [1.0])
    assert np.array_equal(ucm_strength_grid(combined), ucm_strength_grid(fix_b))


def test_multiscale_halves_lone_boundary(fix_b_finest, fix_b_contour):
    u1 = build_ucm(fix_b_finest, fix_b_contour)
    other = fix_b_contour.copy()
    grids.horizontal_edges(other)[:, 2] = 0.0
    u2 = build_ucm(fix_b_finest, other)
    combined = multiscale_combine([u1, u2], [0.5, 0.5])
    h = grids.horizontal_edges(ucm_strength_grid(combined))
    assert np.all(h[:, 2] == 0.2)  # (0.4 + 0) / 2


def test_multiscale_weighted_mean_matches_per_edge_oracle(fix_b_finest, fix_b_contour):
    rng = np.random.default_rng(7)
    inputs = []
    for _ in range(3):
        cm = fix_b_contour.copy()
        he = grids.horizontal_edges(cm)
        for col in range(3):
            he[:, col] = np.clip(he[0, col] + rng.uniform(-0.05, 0.05), 0, 1)
        inputs.append(build_ucm(fix_b_finest, cm))
    weights = [0.5, 0.3, 0.2]
    combined = multiscale_combine(inputs, weights)
    ours = ucm_strength_grid(combined)
    base = ucm_strength_grid(inputs[0])
    expected = base + sum(
        w * (ucm_strength_grid(u) - base) for w, u in zip(weights[1:], inputs[1:])
    )
    boundary = grids.boundary_grid(fix_b_finest) > 0
    np.testing.assert_allclose(ours[boundary], expected[boundary], atol=1e-12)


def test_multiscale_calibration_sigmoid(fix_b):
    combined = multiscale_combine([fix_b], [1.0], calibration=(2.0, -0.5))
    grid = ucm_strength_grid(combined)
    h = grids.horizontal_edges(grid)
    expected = 1.0 / (1.0 + np.exp(-(2.0 * 0.2 - 0.5)))
    assert h[0, 0] == pytest.approx(expected, abs=1e-12)
    assert grids.vertical_edges(grid).max() == 0  # non-boundary sites untouched


def test_multiscale_rejects_mismatched_finest(fix_b):
    other = Ucm(np.zeros((4, 4), dtype=np.int64), ())
    with pytest.raises(ParameterError):
        multiscale_combine([fix_b, other], [0.5, 0.5])
    with pytest.raises(ParameterError):
        multiscale_combine([fix_b, fix_b], [0.9, 0.5])