"""Sorted distance index, condensing, rank lookup, binary cache."""

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from advbound import (
    L2,
    TRACE_AMPLITUDE,
    FormatError,
    MetricMismatch,
    SampleSet,
    condense,
    condense_view,
    find_rank,
    index_from_matrix,
    load_distance_cache,
    pairwise_distances,
    save_distance_cache,
)
from advbound.diagnostics import naive_condense
from advbound.distindex import location_index, sort_rows
from advbound.metrics import amplitude_fidelity, trace_distance_from_fidelity
from conftest import make_clusters

LINE_3 = SampleSet(features=np.array([[0.0], [1.0], [3.0]]))


class TestPairwiseDistances:
    def test_line_rows(self):
        idx = pairwise_distances(LINE_3, L2)
        assert_array_equal(idx.dist[0], [0.0, 1.0, 3.0])
        assert_array_equal(idx.sorted[0], [0.0, 1.0, 3.0])
        assert_array_equal(idx.perm[0], [0, 1, 2])

    def test_diagonal_zero(self):
        s = make_clusters([[2.0, 2.0], [4.0, 1.0]], 10, 0.5, seed=3)
        for metric in (L2, TRACE_AMPLITUDE):
            idx = pairwise_distances(s, metric)
            assert_array_equal(np.diag(idx.dist), np.zeros(s.n))

    def test_trace_matrix_matches_scalar_oracle(self):
        rng = np.random.default_rng(8)
        feats = np.abs(rng.standard_normal((40, 5))) + 0.05
        s = SampleSet(features=feats)
        idx = pairwise_distances(s, TRACE_AMPLITUDE)
        for i in range(s.n):
            for j in range(s.n):
                if i == j:
                    continue
                want = trace_distance_from_fidelity(amplitude_fidelity(feats[i], feats[j]))
                assert idx.dist[i, j] == want  # same scalar code path, exact

    def test_symmetry(self):
        rng = np.random.default_rng(9)
        s = SampleSet(features=rng.standard_normal((30, 4)))
        idx = pairwise_distances(s, L2)
        assert np.max(np.abs(idx.dist - idx.dist.T)) <= 1e-12


class TestSortRows:
    def test_hand_sort(self):
        sorted_, perm = sort_rows(np.array([[0.5, 0.1, 0.3]]))
        assert_array_equal(sorted_[0], [0.1, 0.3, 0.5])
        assert_array_equal(perm[0], [1, 2, 0])

    def test_tie_stability(self):
        _, perm = sort_rows(np.array([[0.2, 0.2]]))
        assert_array_equal(perm[0], [0, 1])

    def test_random_rows_match_comparison_sort(self):
        # independent oracle: Python's timsort over (value, position) pairs
        rng = np.random.default_rng(10)
        rows = rng.integers(0, 6, (1000, 12)) / 7.0  # duplicates likely
        sorted_, perm = sort_rows(rows)
        for i in range(rows.shape[0]):
            ref = sorted(range(12), key=lambda j: (rows[i, j], j))
            assert_array_equal(perm[i], ref)
            assert_array_equal(sorted_[i], rows[i, ref])


class TestLocationIndex:
    def test_hand_inverse(self):
        loc = location_index(np.array([[1, 2, 0]]))
        assert_array_equal(loc[0], [2, 0, 1])

    def test_identity(self):
        eye = np.arange(5)[None, :].repeat(3, axis=0)
        assert_array_equal(location_index(eye), eye)

    def test_composition_is_identity(self):
        rng = np.random.default_rng(11)
        perm = np.stack([rng.permutation(17) for _ in range(40)])
        loc = location_index(perm)
        for i in range(40):
            assert_array_equal(perm[i][loc[i]], np.arange(17))


class TestCondense:
    def test_empty_removal_is_identity(self):
        idx = pairwise_distances(LINE_3, L2)
        view = condense(idx, np.array([], dtype=int))
        assert_array_equal(view.rows, idx.sorted)
        assert_array_equal(view.survivors, idx.perm)

    def test_hand_removal(self):
        idx = pairwise_distances(LINE_3, L2)
        view = condense(idx, np.array([2]))
        assert_array_equal(view.rows[0], [0.0, 1.0])
        # survivors per row, ordered by distance from that row's center
        assert_array_equal(view.survivors[0], [0, 1])
        assert_array_equal(view.survivors[1], [1, 0])

    def test_random_removals_match_naive_resort(self):
        rng = np.random.default_rng(12)
        s = SampleSet(features=rng.standard_normal((50, 3)))
        idx = pairwise_distances(s, L2)
        for _ in range(20):
            k = int(rng.integers(0, 49))
            removed = rng.choice(50, size=k, replace=False)
            view = condense(idx, removed)
            assert_array_equal(view.rows, naive_condense(idx.dist, removed))

    def test_incremental_matches_one_shot(self):
        rng = np.random.default_rng(13)
        s = SampleSet(features=rng.standard_normal((30, 3)))
        idx = pairwise_distances(s, L2)
        first = np.array([3, 7, 11])
        second = np.array([0, 20])
        step = condense_view(condense(idx, first), second)
        both = condense(idx, np.union1d(first, second))
        assert_array_equal(step.rows, both.rows)
        assert_array_equal(step.survivors, both.survivors)

    def test_full_removal_leaves_empty_rows(self):
        idx = pairwise_distances(LINE_3, L2)
        view = condense(idx, np.arange(3))
        assert view.rows.shape == (3, 0)
        assert view.survivors.size == 0


class TestFindRank:
    def test_hand_count(self):
        assert find_rank(np.array([0.1, 0.2, 0.3]), 0.25) == 2

    def test_empty_row(self):
        assert find_rank(np.array([]), 1.0) == 0

    def test_tie_included(self):
        # closed-ball convention: entries equal to the threshold count
        assert find_rank(np.array([0.1, 0.2, 0.2, 0.3]), 0.2) == 3

    def test_random_cases_match_linear_scan(self):
        rng = np.random.default_rng(14)
        for _ in range(10_000):
            row = np.sort(rng.integers(0, 10, size=rng.integers(0, 12)) / 3.0)
            t = float(rng.integers(0, 10)) / 3.0
            assert find_rank(row, t) == int(sum(1 for v in row if v <= t))


class TestDistanceCache:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(15)
        s = SampleSet(features=np.abs(rng.standard_normal((12, 4))) + 0.1)
        dist = TRACE_AMPLITUDE.pairwise(s.features)
        path = tmp_path / "cache.advd"
        save_distance_cache(str(path), dist, TRACE_AMPLITUDE.kind)
        back, kind = load_distance_cache(str(path))
        assert kind is TRACE_AMPLITUDE.kind
        assert_array_equal(back, dist)

    def test_kind_mismatch(self, tmp_path):
        dist = np.zeros((3, 3))
        path = tmp_path / "cache.advd"
        save_distance_cache(str(path), dist, L2.kind)
        with pytest.raises(MetricMismatch):
            load_distance_cache(str(path), expected_kind=TRACE_AMPLITUDE.kind)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.advd"
        path.write_bytes(b"NOPE" + b"\x00" * 32)
        with pytest.raises(FormatError):
            load_distance_cache(str(path))

    def test_truncated(self, tmp_path):
        dist = np.ones((4, 4))
        path = tmp_path / "cache.advd"
        save_distance_cache(str(path), dist, L2.kind)
        blob = path.read_bytes()
        path.write_bytes(blob[:-9])
        with pytest.raises(FormatError):
            load_distance_cache(str(path))


class TestIndexFromMatrix:
    def test_matches_pairwise(self):
        rng = np.random.default_rng(16)
        s = SampleSet(features=rng.standard_normal((20, 3)))
        via_metric = pairwise_distances(s, L2)
        via_matrix = index_from_matrix(L2.pairwise(s.features))
        assert_array_equal(via_metric.sorted, via_matrix.sorted)
        assert_array_equal(via_metric.perm, via_matrix.perm)
        assert_array_equal(via_metric.loc, via_matrix.loc)

    def test_loc_inverts_perm(self):
        rng = np.random.default_rng(17)
        idx = index_from_matrix(L2.pairwise(rng.standard_normal((15, 2))))
        n = idx.n
        for i in range(n):
            assert_array_equal(idx.loc[i][idx.perm[i]], np.arange(n))
