import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jsrec.bpsolve import (Certificate, RankDeficientWarning, SolverSettings, Status, check_smv_certificate,
                           restricted_least_squares, solve_bp, solve_lp)
from jsrec.core import gaussian_matrix, make_rng, random_support, row_sparse_matrix

from oracles import bp_vertex_min, lp_vertex_min

A23 = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])


def _assert_dual_consistent(A, b, rep, tol=1e-8):
    l1 = np.abs(rep.x).sum()
    assert abs(l1 - b @ rep.y) <= tol * (1 + l1)
    assert np.max(np.abs(A.T @ rep.y)) <= 1 + tol


class TestSolveBP:
    def test_identity(self):
        rep = solve_bp(np.eye(2), [3.0, -4.0])
        assert rep.status is Status.OPTIMAL
        np.testing.assert_allclose(rep.x, [3, -4], atol=1e-10)
        assert rep.objective == pytest.approx(7)

    def test_two_by_three_prefers_third_column(self):
        rep = solve_bp(A23, [1.0, 1.0])
        np.testing.assert_allclose(rep.x, [0, 0, 1], atol=1e-10)
        assert rep.objective == pytest.approx(bp_vertex_min(A23, [1, 1])[0], abs=1e-10)
        _assert_dual_consistent(A23, np.array([1.0, 1.0]), rep)

    def test_two_by_three_opposite_signs(self):
        rep = solve_bp(A23, [1.0, -1.0])
        np.testing.assert_allclose(rep.x, [1, -1, 0], atol=1e-10)
        assert rep.objective == pytest.approx(2)

    def test_zero_rhs(self):
        rep = solve_bp(A23, [0.0, 0.0])
        assert rep.ok and not np.any(rep.x)

    def test_inconsistent_rhs_is_infeasible(self):
        rep = solve_bp(np.array([[1.0, 1.0], [1.0, 1.0]]), [1.0, 2.0])
        assert rep.status is Status.INFEASIBLE and not rep.ok

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            solve_bp(A23, [1.0, 2.0, 3.0])

    def test_redundant_rows(self):
        A = np.vstack([A23, A23[0] + A23[1]])
        rep = solve_bp(A, [1.0, 1.0, 2.0])
        np.testing.assert_allclose(rep.x, [0, 0, 1], atol=1e-9)

    @pytest.mark.parametrize("seed", range(20))
    def test_matches_vertex_enumeration(self, seed):
        rng = make_rng(100 + seed)
        m, n = int(rng.integers(1, 5)), int(rng.integers(2, 7))
        A = gaussian_matrix(m, n, rng)
        b = A @ rng.standard_normal(n)
        rep = solve_bp(A, b)
        ref = bp_vertex_min(A, b)
        assert rep.ok
        assert rep.objective == pytest.approx(ref[0], abs=1e-8 * (1 + ref[0]))
        _assert_dual_consistent(A, b, rep)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
    def test_scale_invariance(self, seed, alpha):
        rng = make_rng(seed)
        A = gaussian_matrix(6, 14, rng)
        b = A @ row_sparse_matrix(random_support(14, 2, rng), 1, rng)[:, 0]
        x1 = solve_bp(A, b).x
        x2 = solve_bp(A, alpha * b).x
        np.testing.assert_allclose(x2, alpha * x1, atol=1e-7 * alpha * (1 + np.abs(x1).max()))

    def test_gaussian_sparse_recovery_and_duality(self):
        rng = make_rng(9)
        A = gaussian_matrix(20, 80, rng)
        recovered = 0
        for _ in range(20):
            x0 = row_sparse_matrix(random_support(80, 4, rng), 1, rng)[:, 0]
            rep = solve_bp(A, A @ x0)
            assert rep.ok and rep.polished
            assert rep.objective <= np.abs(x0).sum() + 1e-9
            _assert_dual_consistent(A, A @ x0, rep)
            recovered += np.max(np.abs(rep.x - x0)) <= 1e-9
        assert recovered >= 15

    def test_settings_validation(self):
        with pytest.raises(ValueError):
            SolverSettings(feas_tol=0)
        with pytest.raises(ValueError):
            SolverSettings(recovery_tol=1e-12)
        with pytest.raises(ValueError):
            SolverSettings(max_iter=0)
        assert SolverSettings().updated(max_iter=5).max_iter == 5


class TestSolveLP:
    def test_simple(self):
        res = solve_lp([1.0, 1.0], [[1.0, -1.0]], [2.0])
        assert res.status is Status.OPTIMAL
        np.testing.assert_allclose(res.x, [2, 0], atol=1e-9)

    def test_bp_reformulation_objective(self):
        res = solve_lp(np.ones(6), np.hstack([A23, -A23]), [1.0, 1.0])
        assert res.objective == pytest.approx(1.0, abs=1e-9)
        assert res.objective == pytest.approx(lp_vertex_min(np.ones(6), np.hstack([A23, -A23]), [1, 1])[0])

    def test_infeasible(self):
        assert solve_lp([1.0], [[1.0], [1.0]], [1.0, 2.0]).status is Status.INFEASIBLE
        assert solve_lp([1.0, 1.0], [[1.0, 1.0]], [-1.0]).status is Status.INFEASIBLE

    def test_unbounded(self):
        assert solve_lp([-1.0, 0.0], [[1.0, -1.0]], [0.0]).status is Status.UNBOUNDED

    def test_free_variables(self):
        # min t s.t. t - x = 0, x free, t >= 0 -> 0; free x handled by splitting
        res = solve_lp([1.0, 0.0], [[1.0, -1.0]], [0.0], lower_bounds=[0.0, -np.inf])
        assert res.ok and res.objective == pytest.approx(0.0, abs=1e-9)

    @pytest.mark.parametrize("seed", range(15))
    def test_random_feasible_bounded_against_vertices(self, seed):
        rng = make_rng(300 + seed)
        m, n = int(rng.integers(1, 4)), int(rng.integers(3, 7))
        E = rng.standard_normal((m, n))
        b = E @ rng.random(n)
        c = rng.random(n) + 0.1
        res = solve_lp(c, E, b)
        ref = lp_vertex_min(c, E, b)
        assert res.ok
        assert res.objective == pytest.approx(ref[0], abs=1e-8 * (1 + abs(ref[0])))


class TestRestrictedLeastSquares:
    def test_identity_rows(self):
        B = np.arange(6.0).reshape(3, 2)
        Xbar, res = restricted_least_squares(np.eye(3), [0, 2], B)
        np.testing.assert_array_equal(Xbar, B[[0, 2]])
        assert res == pytest.approx(np.linalg.norm(B[1]))

    def test_consistent_system(self):
        rng = make_rng(2)
        A = gaussian_matrix(8, 20, rng)
        X0 = rng.standard_normal((3, 4))
        B = A[:, [1, 5, 9]] @ X0
        Xbar, res = restricted_least_squares(A, [1, 5, 9], B)
        np.testing.assert_allclose(Xbar, X0, atol=1e-10)
        assert res <= 1e-10 * np.linalg.norm(B)

    def test_scalar_normal_equation(self):
        Xbar, res = restricted_least_squares(np.array([[1.0], [1.0]]), [0], np.array([[0.0], [2.0]]))
        np.testing.assert_allclose(Xbar, [[1.0]])
        assert res == pytest.approx(np.sqrt(2))

    def test_empty_and_oversized(self):
        B = np.ones((2, 1))
        Xbar, res = restricted_least_squares(A23, [], B)
        assert Xbar.shape == (0, 1) and res == pytest.approx(np.sqrt(2))
        with pytest.raises(ValueError):
            restricted_least_squares(A23, [0, 1, 2], B)

    def test_rank_deficient_warns(self):
        A = np.array([[1.0, 2.0, 0.0], [1.0, 2.0, 1.0]])
        with pytest.warns(RankDeficientWarning):
            restricted_least_squares(A, [0, 1], np.ones((2, 1)))


class TestSmvCertificate:
    def test_hand_example(self):
        assert check_smv_certificate(A23, [0, 0, 1], [0.5, 0.5]) is Certificate.UNIQUE_OPTIMAL

    def test_identity(self):
        x = np.array([2.0, -1.0, 0.5])
        assert check_smv_certificate(np.eye(3), x, np.sign(x)) is Certificate.UNIQUE_OPTIMAL

    @pytest.mark.parametrize("y", [[1.0, 1.0], [0.5, 0.5], [1.0, 0.0], [0.0, 0.0]])
    def test_non_optimal_point_is_invalid(self, y):
        assert check_smv_certificate(A23, [1, 1, 0], y) is Certificate.INVALID

    def test_boundary_gives_optimal(self):
        # |a_3'y| = 1 off the support: optimal, not certified unique
        assert check_smv_certificate(A23, [1, 0, 0], [1.0, 0.0]) is Certificate.OPTIMAL

    def test_certified_implies_recovered(self):
        rng = make_rng(21)
        A = gaussian_matrix(10, 30, rng)
        hits = 0
        for _ in range(30):
            x0 = row_sparse_matrix(random_support(30, 2, rng), 1, rng)[:, 0]
            rep = solve_bp(A, A @ x0)
            if check_smv_certificate(A, x0, rep.y) is Certificate.UNIQUE_OPTIMAL:
                hits += 1
                np.testing.assert_allclose(rep.x, x0, atol=1e-5)
        assert hits > 0
