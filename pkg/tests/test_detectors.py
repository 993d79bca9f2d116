import numpy as np
import pytest
from scipy.stats import special_ortho_group

import oracles
from mcod.detectors import (
    LofParams,
    NeighborIndex,
    OcsParams,
    SolverError,
    knn_query,
    lof_scores,
    ocs_fit,
    ocs_scores,
    rbf_kernel,
)


def grid(n=10):
    return np.array([(i, j) for i in range(n) for j in range(n)], dtype=float)


class TestKnn:
    def test_line(self):
        idx = NeighborIndex([[0.0], [1.0], [3.0]])
        rows, dist = knn_query(idx, [0.0], 2, exclude=0)
        assert list(rows) == [1, 2]
        np.testing.assert_array_equal(dist, [1.0, 3.0])

    def test_duplicates_first(self):
        idx = NeighborIndex([[0.0, 0.0], [5.0, 5.0], [0.0, 0.0], [0.0, 0.0]])
        rows, dist = knn_query(idx, [0.0, 0.0], 3, exclude=0)
        assert list(rows) == [2, 3, 1]
        assert dist[0] == 0.0 and dist[1] == 0.0

    def test_tie_break_by_index(self):
        idx = NeighborIndex([[0.0], [-1.0], [1.0], [2.0]])
        rows, _ = knn_query(idx, [0.0], 2, exclude=0)
        assert list(rows) == [1, 2]

    def test_matches_sort_oracle(self):
        pts = np.random.default_rng(0).normal(size=(200, 3))
        idx = NeighborIndex(pts)
        rows, dist = idx.all_knn(7)
        for i in range(0, 200, 7):
            want = oracles.knn_sorted(pts.tolist(), i, 7)
            assert list(rows[i]) == [j for _, j in want]
            np.testing.assert_allclose(dist[i], [d for d, _ in want], rtol=1e-12)

    def test_range_errors(self):
        idx = NeighborIndex(np.zeros((4, 1)))
        with pytest.raises(ValueError):
            knn_query(idx, [0.0], 4, exclude=0)
        with pytest.raises(ValueError):
            knn_query(idx, [0.0], 0)
        knn_query(idx, [0.0], 4)
        with pytest.raises(ValueError):
            NeighborIndex(np.zeros((1, 2)))


class TestLof:
    @pytest.mark.parametrize("k", [3, 5, 10])
    def test_matches_brute_force(self, k):
        pts = np.random.default_rng(k).normal(size=(80, 3))
        np.testing.assert_allclose(lof_scores(pts, LofParams(k)), oracles.brute_lof(pts.tolist(), k),
                                   rtol=0, atol=1e-9)

    def test_grid_interior(self):
        g = grid()
        s = lof_scores(g, LofParams(8))
        interior = 5 * 10 + 5
        assert 0.8 <= s[interior] <= 1.2
        assert s[interior] == pytest.approx(oracles.brute_lof(g.tolist(), 8)[interior], abs=1e-9)

    def test_far_point_is_top(self):
        pts = np.vstack([grid(), [[4.5 + 50.0, 4.5]]])
        s = lof_scores(pts, LofParams(8))
        assert np.argmax(s) == 100
        assert s[100] > np.max(s[:100])

    def test_all_identical(self):
        s = lof_scores(np.ones((20, 3)), LofParams(5))
        np.testing.assert_array_equal(s, np.ones(20))

    def test_duplicate_clusters_finite(self):
        pts = np.vstack([np.zeros((15, 2)), np.ones((3, 2)), [[5.0, 5.0]]])
        s = lof_scores(pts, LofParams(4))
        assert np.isfinite(s).all()
        np.testing.assert_allclose(s, oracles.brute_lof(pts.tolist(), 4), rtol=1e-12)

    def test_too_few_points(self):
        with pytest.raises(ValueError):
            lof_scores(np.zeros((5, 2)), LofParams(5))

    def test_rigid_motion_and_scaling(self):
        rng = np.random.default_rng(4)
        pts = rng.normal(size=(150, 4))
        base = lof_scores(pts, LofParams(5))
        moved = pts @ special_ortho_group.rvs(4, random_state=1).T + rng.normal(size=4) * 10
        np.testing.assert_allclose(lof_scores(moved, LofParams(5)), base, atol=1e-9)
        np.testing.assert_allclose(lof_scores(pts * 37.5, LofParams(5)), base, atol=1e-9)


class TestOcs:
    def test_kernel_diagonal(self):
        pts = np.random.default_rng(0).normal(size=(5, 3))
        for gamma in (0.01, 1.0, 50.0):
            np.testing.assert_array_equal(np.diag(rbf_kernel(pts, pts, gamma)), 1.0)

    @pytest.mark.parametrize("seed", range(5))
    def test_nu_property(self, seed):
        pts = np.random.default_rng(seed).standard_normal((500, 5))
        model = ocs_fit(pts, OcsParams(nu=0.1))
        frac = np.mean(model.decision(pts) < 0)
        assert 0.05 <= frac <= 0.15
        # at least a nu fraction of points are support vectors
        assert np.count_nonzero(model.full_alpha) >= 0.1 * 500 - 1

    def test_dual_feasibility_and_kkt(self):
        pts = np.random.default_rng(1).standard_normal((300, 3))
        params = OcsParams(nu=0.2, solver_tol=1e-7)
        m = ocs_fit(pts, params)
        a = m.full_alpha
        c = 1 / (0.2 * 300)
        assert abs(a.sum() - 1) < 1e-9
        assert a.min() >= 0 and a.max() <= c + 1e-12
        assert m.kkt_gap < 1e-7
        # KKT: free SVs sit on the boundary, bound SVs outside, zeros inside
        f = m.decision(pts)
        free = (a > 1e-12) & (a < c - 1e-12)
        assert np.all(np.abs(f[free]) < 1e-6)
        assert np.all(f[a >= c] <= 1e-6)
        assert np.all(f[a == 0] >= -1e-6)

    def test_far_point_approaches_offset(self):
        pts = np.random.default_rng(2).standard_normal((200, 2))
        m = ocs_fit(pts)
        s = ocs_scores(m, [[1e3, 1e3]])
        assert s[0] == pytest.approx(m.offset, abs=1e-12)
        assert s[0] >= ocs_scores(m, pts).max()

    def test_radial_monotone(self):
        pts = np.random.default_rng(3).standard_normal((400, 3))
        m = ocs_fit(pts, OcsParams(nu=0.1))
        r0 = np.linalg.norm(pts, axis=1).max()
        for direction in np.random.default_rng(4).normal(size=(10, 3)):
            u = direction / np.linalg.norm(direction)
            radii = np.linspace(r0, 6 * r0, 60)
            s = ocs_scores(m, radii[:, None] * u)
            assert np.all(np.diff(s) >= -1e-12)

    def test_duplicated_data_same_boundary(self):
        pts = np.random.default_rng(5).standard_normal((150, 2))
        params = OcsParams(nu=0.1, gamma=0.5, solver_tol=1e-8)
        a = ocs_fit(pts, params)
        b = ocs_fit(np.vstack([pts, pts]), params)
        fa, fb = a.decision(pts), b.decision(pts)
        np.testing.assert_allclose(fa, fb, atol=1e-5)
        clear = np.abs(fa) > 1e-4
        np.testing.assert_array_equal(np.sign(fa[clear]), np.sign(fb[clear]))

    def test_duplicate_points_ok(self):
        pts = np.repeat(np.eye(3), 30, axis=0)
        m = ocs_fit(pts, OcsParams(nu=0.1))
        assert np.isfinite(ocs_scores(m, pts)).all()

    def test_dimension_mismatch(self):
        m = ocs_fit(np.random.default_rng(0).normal(size=(20, 2)))
        with pytest.raises(ValueError):
            ocs_scores(m, np.zeros((3, 4)))

    def test_iteration_budget_reported(self):
        pts = np.random.default_rng(0).normal(size=(200, 2))
        with pytest.raises(SolverError):
            ocs_fit(pts, OcsParams(nu=0.1, max_iter=2))

    def test_param_validation(self):
        with pytest.raises(ValueError):
            OcsParams(nu=0.0)
        with pytest.raises(ValueError):
            OcsParams(gamma=-1.0)
