import itertools

import numpy as np
import pytest

from mcg.errors import ParameterError
from mcg.evaluation import jaccard
from mcg.pareto import (FrontParams, ParetoPoint, combine_at, greedy_front_combine,
                        overlap_table, pareto_filter, select_working_point)

from oracles import exhaustive_front


def test_pareto_filter_example():
    points = [
        ParetoPoint(10, 0.5, (10,)),
        ParetoPoint(20, 0.6, (20,)),
        ParetoPoint(15, 0.55, (15,)),
        ParetoPoint(20, 0.55, (20,)),
    ]
    front = pareto_filter(points)
    assert [(p.n_proposals, p.quality) for p in front] == [
        (10, 0.5), (15, 0.55), (20, 0.6),
    ]


def test_pareto_filter_single_point():
    point = ParetoPoint(5, 0.3, (5,))
    assert pareto_filter([point]) == [point]


def test_pareto_filter_equal_points_keep_smallest_params():
    points = [ParetoPoint(5, 0.3, (3, 2)), ParetoPoint(5, 0.3, (2, 3))]
    assert pareto_filter(points) == [ParetoPoint(5, 0.3, (2, 3))]


def test_pareto_filter_matches_quadratic_oracle():
    rng = np.random.default_rng(0)
    for _ in range(20):
        points = [
            ParetoPoint(int(rng.integers(0, 30)), float(rng.random()), (i,))
            for i in range(25)
        ]
        front = pareto_filter(points)
        naive = []
        for p in points:
            dominated = any(
                (q.n_proposals <= p.n_proposals and q.quality >= p.quality)
                and (q.n_proposals < p.n_proposals or q.quality > p.quality)
                for q in points
            )
            if not dominated:
                naive.append((p.n_proposals, p.quality))
        assert {(p.n_proposals, p.quality) for p in front} == set(naive)
        qualities = [p.quality for p in front]
        assert all(a < b for a, b in zip(qualities, qualities[1:]))


def _toy_corpus(rng, n_images=2, n_lists=3, list_len=4):
    """Random ranked mask lists + gts, returned as overlap tables."""
    gts = []
    mask_lists = [[] for _ in range(n_lists)]
    for _ in range(n_images):
        gt = np.zeros((6, 6), dtype=int)
        gt[:3, :3] = 1
        gt[3:, 3:] = 2
        gts.append(gt)
        for lst in mask_lists:
            masks = [rng.random((6, 6)) > rng.uniform(0.3, 0.7)
                     for _ in range(list_len)]
            lst.append(masks)
    overlap_lists = [
        [overlap_table(masks, gt) for masks, gt in zip(lst, gts)]
        for lst in mask_lists
    ]
    return overlap_lists


def test_greedy_front_evaluation_count():
    rng = np.random.default_rng(1)
    overlap_lists = _toy_corpus(rng, n_lists=2)
    _, evals = greedy_front_combine(overlap_lists, 3)
    assert evals == (2 - 1) * 9
    overlap_lists = _toy_corpus(rng, n_lists=4)
    _, evals = greedy_front_combine(overlap_lists, 5)
    assert evals == (4 - 1) * 25


def test_greedy_front_empty_second_list():
    rng = np.random.default_rng(2)
    overlap_lists = _toy_corpus(rng, n_lists=2)
    overlap_lists[1] = [np.zeros((0, 2)) for _ in overlap_lists[1]]
    front, evals = greedy_front_combine(overlap_lists, 4)
    assert evals == 16
    # the front is list 1's own quality curve
    for p in front:
        assert p.params[1] == 0


def test_greedy_front_close_to_exhaustive():
    rng = np.random.default_rng(3)
    overlap_lists = _toy_corpus(rng, n_lists=3, list_len=4)
    front, _ = greedy_front_combine(overlap_lists, 5)
    counts_per_list = [range(5) for _ in range(3)]
    oracle = exhaustive_front(overlap_lists, counts_per_list)
    for n, oracle_quality in oracle:
        achievable = max(
            (p.quality for p in front if p.n_proposals <= n), default=0.0
        )
        assert achievable >= oracle_quality - 0.005


def test_greedy_front_dominates_individual_lists():
    rng = np.random.default_rng(4)
    overlap_lists = _toy_corpus(rng, n_lists=3, list_len=4)
    front, _ = greedy_front_combine(overlap_lists, 5)
    for list_idx in range(3):
        for take in range(5):
            quality = float(np.concatenate([
                t[:take].max(axis=0) if take and t[:take].size else np.zeros(t.shape[1])
                for t in overlap_lists[list_idx]
            ]).mean())
            achievable = max(
                (p.quality for p in front if p.n_proposals <= take), default=0.0
            )
            assert achievable >= quality - 1e-12


def test_greedy_front_validations():
    rng = np.random.default_rng(5)
    overlap_lists = _toy_corpus(rng, n_lists=2)
    with pytest.raises(ParameterError):
        greedy_front_combine(overlap_lists[:1], 3)
    with pytest.raises(ParameterError):
        greedy_front_combine(overlap_lists, 1)
    empty = [[np.zeros((3, 0))], [np.zeros((3, 0))]]
    with pytest.raises(ParameterError):
        greedy_front_combine(empty, 3)


def test_select_working_point_examples():
    front = [ParetoPoint(10, 0.5, (10, 0)), ParetoPoint(20, 0.6, (20, 0))]
    assert select_working_point(front, max_proposals=15).counts == (10, 0)
    assert select_working_point(front, min_quality=0.55).counts == (20, 0)
    fallback = select_working_point(front, min_quality=0.99)
    assert fallback.counts == (20, 0)
    assert fallback.infeasible


def test_select_working_point_validations():
    front = [ParetoPoint(10, 0.5, (10,))]
    with pytest.raises(ParameterError):
        select_working_point([], max_proposals=5)
    with pytest.raises(ParameterError):
        select_working_point(front)
    with pytest.raises(ParameterError):
        select_working_point(front, max_proposals=5, min_quality=0.5)


def _mask_id(item):
    return item


def test_combine_at_zero_params():
    lists = [[np.ones((2, 2), bool)], [np.zeros((2, 2), bool)]]
    assert combine_at([0, 0], lists, _mask_id) == []


def test_combine_at_full_list_dedups():
    a = np.zeros((2, 2), bool)
    a[0, 0] = True
    dup = a.copy()
    b = ~a
    pool = combine_at([3], [[a, dup, b]], _mask_id)
    assert len(pool) == 2
    assert pool[0] is a and pool[1] is b


def test_combine_at_known_duplicates(fix_b):
    from mcg.grouping import Proposal, proposal_mask
    lists = [
        [Proposal(0, (4,), 0.9), Proposal(0, (5,), 0.9)],   # e, f
        [Proposal(0, (0, 1), 0.2), Proposal(0, (2, 3), 0.4)],  # duplicates of e, f
    ]
    pool = combine_at([2, 2], lists, lambda p: proposal_mask(p, fix_b))
    assert [p.node_ids for p in pool] == [(4,), (5,)]


def test_combine_at_validations():
    with pytest.raises(ParameterError):
        combine_at([1], [[], []], _mask_id)
    with pytest.raises(ParameterError):
        combine_at([2], [[np.ones((1, 1), bool)]], _mask_id)


def test_front_params_as_dict():
    params = FrontParams((3, 1), ("a/singletons", "b/pairs"))
    assert params.as_dict() == {"a/singletons": 3, "b/pairs": 1}