import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jsrec.combinatorics import (PatternStats, clustered_columns, cnd, estimate_pattern_probability,
                                 mean_pairwise_angle, mutual_coherence, pattern_string, sample_sign_patterns)
from jsrec.core import SignPattern, make_rng
from jsrec.errors import DegenerateRow

from oracles import cnd_recurrence, orthants_hit


class TestCnd:
    @pytest.mark.parametrize("n,d,expected", [(5, 1, 2), (3, 5, 8), (4, 2, 8), (10, 5, 512)])
    def test_values(self, n, d, expected):
        assert cnd(n, d) == expected

    def test_recurrence_up_to_64(self):
        for n in range(1, 65):
            for d in range(1, 65):
                assert cnd(n, d) == cnd_recurrence(n, d)

    @given(st.integers(1, 64), st.integers(0, 64))
    def test_complement_identity(self, n, d):
        if 1 <= d < n:
            assert cnd(n, d) == 2**n - cnd(n, n - d)

    def test_half_dimension(self):
        for d in range(1, 13):
            assert cnd(2 * d, d) == 2 ** (2 * d - 1)

    def test_monte_carlo_orthants(self):
        assert orthants_hit(4, 2, make_rng(3)) == cnd(4, 2)

    def test_invalid(self):
        with pytest.raises(ValueError):
            cnd(0, 1)
        with pytest.raises(ValueError):
            cnd(3, 0)


class TestSampling:
    def test_single_column_has_one_pair(self):
        Xbar = make_rng(1).standard_normal((7, 1))
        stats = sample_sign_patterns(Xbar, 500, make_rng(2))
        assert stats.unique_pairs == 1
        assert all(u == 1 for _, u in stats.new_per_iteration)

    def test_full_rank_square_reaches_all_pairs(self):
        Xbar = make_rng(3).standard_normal((4, 4))
        stats = sample_sign_patterns(Xbar, 200_000, make_rng(4))
        assert stats.unique_pairs == 2**4 // 2

    def test_ten_by_five_bounded(self):
        Xbar = make_rng(5).standard_normal((10, 5))
        stats = sample_sign_patterns(Xbar, 100_000, make_rng(6))
        assert stats.unique_pairs <= cnd(10, 5) // 2

    @settings(max_examples=15, deadline=None)
    @given(st.integers(1, 8), st.integers(1, 4), st.integers(0, 2**31))
    def test_monotone_and_bounded(self, s, r, seed):
        Xbar = make_rng(seed).standard_normal((s, r))
        stats = sample_sign_patterns(Xbar, 3000, make_rng(seed, 1))
        counts = [u for _, u in stats.new_per_iteration]
        assert counts == sorted(counts)
        assert stats.unique_pairs <= cnd(s, r) // 2
        assert sum(stats.frequency.values()) == stats.trials == 3000

    def test_chunking_does_not_change_result(self):
        Xbar = make_rng(7).standard_normal((6, 3))
        a = sample_sign_patterns(Xbar, 5000, make_rng(8), chunk=1 << 16)
        b = sample_sign_patterns(Xbar, 5000, make_rng(8), chunk=5000)
        assert a.frequency == b.frequency and a.first_seen == b.first_seen

    def test_zero_row_rejected(self):
        with pytest.raises(DegenerateRow):
            sample_sign_patterns(np.array([[1.0, 2.0], [0.0, 0.0]]), 10, make_rng(0))

    def test_merge_reproduces_single_run(self):
        Xbar = make_rng(9).standard_normal((5, 2))
        rng = make_rng(10)
        first = sample_sign_patterns(Xbar, 300, rng)
        second = sample_sign_patterns(Xbar, 700, rng)
        whole = sample_sign_patterns(Xbar, 1000, make_rng(10), chunk=300)
        merged = first.merge(second)
        assert merged.trials == 1000
        assert merged.frequency == whole.frequency
        assert merged.first_seen == whole.first_seen

    def test_csv(self, tmp_path):
        stats = PatternStats(3, 10, {0: 0, 2: 4}, {0: 6, 2: 4})
        stats.write_csv(tmp_path / "p.csv")
        assert (tmp_path / "p.csv").read_text() == "pattern,count,first_seen\n+++,6,0\n+-+,4,4\n"
        assert [str(p) for p in stats.patterns()] == ["+++", "+-+"]
        np.testing.assert_array_equal(stats.unique_after([1, 4, 5, 10]), [1, 1, 2, 2])

    def test_pattern_string(self):
        assert pattern_string(0b0110, 4) == "+--+"


class TestPatternProbability:
    def test_scalar_is_certain(self):
        p, _ = estimate_pattern_probability(np.array([[1.0]]), SignPattern.from_string("+"), 100, make_rng(0))
        assert p == 1.0

    @pytest.mark.parametrize("pattern", ["++", "+-"])
    def test_identity_splits_evenly(self, pattern):
        p, se = estimate_pattern_probability(np.eye(2), SignPattern.from_string(pattern), 20000, make_rng(1))
        assert abs(p - 0.5) <= 3 * se

    def test_probabilities_sum_to_one(self):
        Xbar = make_rng(2).standard_normal((4, 2))
        total, var = 0.0, 0.0
        for code in range(0, 16, 2):
            p, se = estimate_pattern_probability(Xbar, SignPattern.from_code(code, range(4)), 5000, make_rng(3, code))
            total += p
            var += se**2
        assert abs(total - 1.0) <= 3 * math.sqrt(var) + 1e-12

    def test_clustered_rows_suppress_mixed_patterns(self):
        rng = make_rng(4)
        Xbar = clustered_columns(5, 6, 0.08, rng).T
        assert mean_pairwise_angle(Xbar.T) < 15
        stats = sample_sign_patterns(Xbar, 20000, make_rng(5))
        allplus = stats.frequency.get(0, 0) / stats.trials
        mixed = max((c / stats.trials for k, c in stats.frequency.items() if k != 0), default=0.0)
        assert allplus > 0.5 and mixed < 0.1


class TestCoherence:
    def test_orthogonal(self):
        assert mutual_coherence(np.eye(3), "max") == 0.0

    def test_duplicate_column(self):
        X = np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        assert mutual_coherence(X, "max") == pytest.approx(1.0)
        assert mutual_coherence(X, "min") == pytest.approx(0.0)

    def test_two_columns(self):
        assert mutual_coherence(np.array([[1.0, 1.0], [0.0, 1.0]])) == pytest.approx(1 / math.sqrt(2))

    def test_invalid(self):
        with pytest.raises(ValueError):
            mutual_coherence(np.ones((2, 1)))
        with pytest.raises(ValueError):
            mutual_coherence(np.eye(2), "median")
