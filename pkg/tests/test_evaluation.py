import numpy as np
import pytest

from mcg.errors import ParameterError
from mcg.evaluation import (best_overlap_per_instance, geometric_counts,
                            instance_level_jaccard, jaccard,
                            quality_vs_count_curve, recall_at)


def box_mask(h, w, y0, x0, y1, x1):
    mask = np.zeros((h, w), dtype=bool)
    mask[y0:y1, x0:x1] = True
    return mask


def test_jaccard_identical_and_disjoint():
    a = box_mask(4, 4, 0, 0, 2, 2)
    b = box_mask(4, 4, 2, 2, 4, 4)
    assert jaccard(a, a) == 1.0
    assert jaccard(a, b) == 0.0


def test_jaccard_one_shared_pixel():
    a = np.zeros((2, 2), dtype=bool)
    a[0, 0] = a[0, 1] = True
    b = np.zeros((2, 2), dtype=bool)
    b[0, 1] = b[1, 1] = True
    assert jaccard(a, b) == pytest.approx(1 / 3)


def test_jaccard_empty_empty_is_zero():
    empty = np.zeros((3, 3), dtype=bool)
    assert jaccard(empty, empty) == 0.0


def test_jaccard_symmetry_property():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a = rng.random((5, 5)) > 0.5
        b = rng.random((5, 5)) > 0.5
        assert jaccard(a, b) == jaccard(b, a)
        if a.any():
            assert jaccard(a, a) == 1.0


def test_jaccard_dim_mismatch():
    with pytest.raises(ParameterError):
        jaccard(np.zeros((2, 2), bool), np.zeros((3, 3), bool))


def test_best_overlap_exact_pool():
    gt = np.zeros((4, 4), dtype=int)
    gt[:2, :2] = 1
    gt[2:, 2:] = 2
    pool = [gt == 1, gt == 2]
    assert best_overlap_per_instance(pool, gt).tolist() == [1.0, 1.0]


def test_best_overlap_empty_pool():
    gt = np.zeros((4, 4), dtype=int)
    gt[0, 0] = 1
    assert best_overlap_per_instance([], gt).tolist() == [0.0]


def test_best_overlap_matches_exhaustive_oracle():
    rng = np.random.default_rng(1)
    for _ in range(10):
        gt = rng.integers(0, 4, (8, 8))
        pool = [rng.random((8, 8)) > 0.5 for _ in range(5)]
        ours = best_overlap_per_instance(pool, gt)
        for inst in range(1, gt.max() + 1):
            target = gt == inst
            oracle = max(jaccard(m, target) for m in pool)
            assert ours[inst - 1] == oracle


def test_instance_level_jaccard_is_mean():
    gt1 = np.zeros((2, 2), dtype=int)
    gt1[0, 0] = 1
    gt1[1, 1] = 2
    exact1 = gt1 == 1
    # overlaps: instance1 -> 1.0, instance2 -> 0.0
    assert instance_level_jaccard([[exact1]], [gt1]) == 0.5


def test_instance_level_jaccard_requires_instances():
    with pytest.raises(ParameterError):
        instance_level_jaccard([[np.zeros((2, 2), bool)]], [np.zeros((2, 2), int)])


def test_recall_examples():
    gt = np.zeros((3, 3), dtype=int)
    gt[0, :] = 1
    gt[1, :] = 2
    gt[2, :] = 3
    # craft pools with best overlaps 0.9, 0.6, 0.4: use partial matches
    pool = [
        np.vstack([np.array([[1, 1, 1]]), np.zeros((2, 3))]).astype(bool),  # J=1 inst1
        np.vstack([np.zeros((1, 3)), np.array([[1, 1, 0]]), np.zeros((1, 3))]).astype(bool),  # 2/3 inst2
        np.vstack([np.zeros((2, 3)), np.array([[1, 0, 0]])]).astype(bool),  # 1/3 inst3
    ]
    assert recall_at([pool], [gt], 0.5) == pytest.approx(2 / 3)
    assert recall_at([pool], [gt], 0.85) == pytest.approx(1 / 3)


def test_recall_monotone_in_threshold():
    rng = np.random.default_rng(2)
    for _ in range(10):
        gt = rng.integers(0, 3, (6, 6))
        if gt.max() == 0:
            continue
        pool = [rng.random((6, 6)) > 0.6 for _ in range(4)]
        values = [recall_at([pool], [gt], t) for t in (0.3, 0.5, 0.7, 0.85, 1.0)]
        assert all(a >= b for a, b in zip(values, values[1:]))


def test_recall_threshold_validation():
    gt = np.ones((2, 2), dtype=int)
    with pytest.raises(ParameterError):
        recall_at([[np.ones((2, 2), bool)]], [gt], 0.0)


def test_curve_trivial_counts():
    gt = np.zeros((4, 4), dtype=int)
    gt[:2, :2] = 1
    pool = [gt == 1]
    rows = quality_vs_count_curve([pool], [gt], [0, 1])
    assert rows[0] == (0, 0.0, 0.0, 0.0, 0.0)
    assert rows[1] == (1, 1.0, 1.0, 1.0, 1.0)


def test_curve_monotone_in_count():
    rng = np.random.default_rng(3)
    for _ in range(5):
        gt = rng.integers(0, 3, (8, 8))
        if gt.max() == 0:
            continue
        pool = [rng.random((8, 8)) > 0.5 for _ in range(8)]
        rows = quality_vs_count_curve([pool], [gt], [0, 1, 2, 4, 8])
        for col in range(1, 5):
            values = [r[col] for r in rows]
            assert all(a <= b for a, b in zip(values, values[1:]))


def test_curve_rejects_descending_counts():
    gt = np.ones((2, 2), dtype=int)
    with pytest.raises(ParameterError):
        quality_vs_count_curve([[np.ones((2, 2), bool)]], [gt], [2, 1])


def test_geometric_counts_shape():
    assert geometric_counts(0, 4) == [0, 0, 0, 0]
    assert geometric_counts(100, 5) == [0, 1, 5, 22, 100]
    assert geometric_counts(7, 2) == [0, 7]
    assert len(geometric_counts(3, 9)) == 9