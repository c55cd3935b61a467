"""
Тесты MSM-аппроксимации
"""

import numpy as np
import pytest

from core.exceptions import (
    EmptySeries,
    InvalidConfig,
    InvalidSeries,
    LengthMismatch,
    NotPowerOfSegmentSize,
    ZeroSize,
)
from core.msm_approx import (
    ApproxParams,
    OperationCounter,
    PriceSeries,
    approximate,
    build_tree,
    build_trees,
    partition,
    validate_params,
)

VALID_PARAMS = [(27, 3), (9, 3), (8, 2), (16, 4), (1, 1)]


class TestValidateParams:

    @pytest.mark.parametrize('K,t,expected', [
        (27, 3, 3), (1, 1, 0), (9, 3, 2), (8, 2, 3), (16, 4, 2), (4, 4, 1),
    ])
    def test_level_count(self, K, t, expected):
        assert validate_params(ApproxParams(K, t)) == expected
        assert ApproxParams(K, t).level_count == expected

    @pytest.mark.parametrize('K,t', [(10, 3), (12, 2), (3, 1), (28, 3)])
    def test_not_power(self, K, t):
        with pytest.raises(NotPowerOfSegmentSize):
            validate_params(ApproxParams(K, t))

    @pytest.mark.parametrize('K,t', [(0, 3), (27, 0), (0, 0), (-27, 3)])
    def test_zero_size(self, K, t):
        with pytest.raises(ZeroSize):
            validate_params(ApproxParams(K, t))

    def test_non_integer_rejected(self):
        with pytest.raises(InvalidConfig):
            validate_params(ApproxParams(27.0, 3))
        with pytest.raises(InvalidConfig):
            validate_params(ApproxParams(True, 1))


class TestPriceSeries:

    def test_rejects_non_finite(self):
        with pytest.raises(InvalidSeries):
            PriceSeries((1.0, float('nan'), 3.0))
        with pytest.raises(InvalidSeries):
            PriceSeries((1.0, float('inf')))

    def test_label_length_must_match(self):
        with pytest.raises(InvalidSeries):
            PriceSeries((1.0, 2.0), ('2010-04-01',))

    def test_head_keeps_labels(self):
        series = PriceSeries((1.0, 2.0, 3.0), ('a', 'b', 'c'))
        head = series.head(2)
        assert head.values == (1.0, 2.0)
        assert head.labels == ('a', 'b')

    def test_array_is_read_only(self):
        array = PriceSeries((1.0, 2.0)).as_array()
        with pytest.raises(ValueError):
            array[0] = 5.0


class TestPartition:

    def test_exact_division(self):
        parts, dropped = partition(PriceSeries(tuple(range(54))), 27)
        assert len(parts) == 2
        assert dropped == 0
        assert parts[1][0] == 27

    def test_tail_dropped(self):
        parts, dropped = partition(PriceSeries(tuple(range(60))), 27)
        assert len(parts) == 2
        assert dropped == 6
        assert all(len(p) == 27 for p in parts)

    def test_shorter_than_partition(self):
        with pytest.raises(EmptySeries):
            partition(PriceSeries(tuple(range(10))), 27)


class TestBuildTree:

    def test_segment_means_of_one_to_27(self):
        tree = build_tree(list(range(1, 28)), ApproxParams(27, 3))
        assert tree.depth == 3
        assert tree.level(2) == (2.0, 5.0, 8.0, 11.0, 14.0, 17.0, 20.0, 23.0, 26.0)
        assert tree.level(1) == (5.0, 14.0, 23.0)
        assert tree.level(0) == (14.0,)
        assert tree.root == 14.0

    @pytest.mark.parametrize('c', [7.25, 0.1, 0.7, 1234.56])
    def test_constant_partition(self, c):
        tree = build_tree([c] * 27, ApproxParams(27, 3))
        for j in range(tree.depth):
            assert set(tree.level(j)) == {c}

    def test_identity_case(self):
        tree = build_tree([7.5], ApproxParams(1, 1))
        assert tree.depth == 1
        assert tree.level(0) == (7.5,)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            build_tree(list(range(26)), ApproxParams(27, 3))

    def test_level_out_of_range(self):
        tree = build_tree(list(range(9)), ApproxParams(9, 3))
        with pytest.raises(IndexError):
            tree.level(2)

    @pytest.mark.parametrize('K,t', VALID_PARAMS)
    def test_tree_structure(self, rng, K, t):
        values = rng.uniform(1, 1000, size=K)
        tree = build_tree(values, ApproxParams(K, t))
        levels = tree.depth

        for j in range(levels):
            assert len(tree.level(j)) == t ** j
            assert min(tree.level(j)) >= values.min()
            assert max(tree.level(j)) <= values.max()

        for j in range(1, levels):
            children = np.asarray(tree.level(j)).reshape(-1, t)
            for parent, block in zip(tree.level(j - 1), children):
                assert parent == pytest.approx(sum(block) / t, rel=1e-9)

        assert tree.root == pytest.approx(sum(values) / K, rel=1e-9)


class TestApproximate:

    def test_two_partitions(self):
        ap = approximate(PriceSeries(tuple(range(1, 55))), ApproxParams(27, 3))
        assert ap.values == (14.0, 41.0)
        assert ap.dropped_tail == 0

    @pytest.mark.parametrize('c', [7.25, 0.1, 0.7])
    def test_constant_series(self, c):
        ap = approximate(PriceSeries((c,) * 81), ApproxParams(9, 3))
        assert ap.values == (c,) * 9

    def test_means_stay_within_partition_range(self):
        series = PriceSeries((0.1, 0.1, 0.1, 0.7, 0.7, 0.7, 0.3, 0.3, 0.3) * 6)
        for tree in build_trees(series, ApproxParams(9, 3)):
            for j in range(tree.depth):
                assert all(0.1 <= value <= 0.7 for value in tree.level(j))
            assert tree.level(1) == (0.1, 0.7, 0.3)

    def test_identity(self, rng):
        values = tuple(rng.uniform(1, 100, size=37).tolist())
        ap = approximate(PriceSeries(values), ApproxParams(1, 1))
        assert ap.values == values

    def test_tail_and_labels(self):
        labels = tuple(f"d{i}" for i in range(60))
        ap = approximate(PriceSeries(tuple(range(60)), labels), ApproxParams(27, 3))
        assert len(ap) == 2
        assert ap.dropped_tail == 6
        assert ap.labels == ('d0', 'd27')

    def test_propagates_errors(self):
        with pytest.raises(EmptySeries):
            approximate(PriceSeries(tuple(range(10))), ApproxParams(27, 3))
        with pytest.raises(NotPowerOfSegmentSize):
            approximate(PriceSeries(tuple(range(100))), ApproxParams(10, 3))

    def test_only_affected_partition_changes(self, rng):
        values = rng.uniform(1, 1000, size=27 * 4)
        before = approximate(PriceSeries(tuple(values.tolist())), ApproxParams(27, 3))
        values[27 * 2 + 5] += 50.0
        after = approximate(PriceSeries(tuple(values.tolist())), ApproxParams(27, 3))

        changed = [i for i in range(4) if before.values[i] != after.values[i]]
        assert changed == [2]

    def test_roots_match_build_trees(self, rng):
        series = PriceSeries(tuple(rng.uniform(1, 1000, size=27 * 5 + 3).tolist()))
        params = ApproxParams(27, 3)
        trees = build_trees(series, params)
        ap = approximate(series, params)
        assert [tree.partition_index for tree in trees] == [1, 2, 3, 4, 5]
        assert tuple(tree.root for tree in trees) == ap.values

    @pytest.mark.slow
    def test_block_means_on_random_series(self, rng):
        for _ in range(500):
            length = int(rng.integers(27, 2701))
            values = rng.uniform(1, 1000, size=length)
            series = PriceSeries(tuple(values.tolist()))

            for K, t in VALID_PARAMS:
                ap = approximate(series, ApproxParams(K, t))
                assert len(ap) == length // K
                assert ap.dropped_tail == length % K
                raw = series.values
                for i, value in enumerate(ap.values):
                    expected = sum(raw[i * K:(i + 1) * K]) / K
                    assert abs(value - expected) <= 1e-9 * abs(expected), (length, K, t, i)


class TestOperationCount:

    @pytest.mark.parametrize('K,t', [(27, 3), (16, 4), (8, 2)])
    def test_linear_in_length(self, rng, K, t):
        params = ApproxParams(K, t)
        small, large = OperationCounter(), OperationCounter()

        approximate(PriceSeries(tuple(rng.uniform(1, 100, size=K * 100).tolist())), params, small)
        approximate(PriceSeries(tuple(rng.uniform(1, 100, size=K * 200).tolist())), params, large)

        assert small.total > 0
        assert 1.9 <= large.total / small.total <= 2.1

    def test_counts_for_one_partition(self):
        counter = OperationCounter()
        build_tree(list(range(1, 28)), ApproxParams(27, 3), counter=counter)
        # 27 + 9 + 3 слагаемых, 9 + 3 + 1 делений
        assert counter.additions == 39
        assert counter.divisions == 13
        counter.reset()
        assert counter.total == 0
