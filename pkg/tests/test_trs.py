import numpy as np
import pytest
from numpy.testing import assert_allclose

from rtls import trs_equality
from rtls.trs import radial_values


class TestTrsEquality:
    def test_zero_radius(self):
        sol = trs_equality(np.eye(3), np.ones(3), 0.0)
        assert_allclose(sol.x, np.zeros(3))
        assert not sol.hard_case

    def test_identity_closed_form(self):
        # (1 + mu) x = e1 with |x| = 2 gives x = 2 e1, mu = -1/2
        sol = trs_equality(np.eye(2), np.array([1.0, 0.0]), 2.0)
        assert_allclose(sol.x, np.array([2.0, 0.0]), atol=1e-12)
        assert sol.lam == pytest.approx(-0.5, rel=1e-12)
        assert not sol.hard_case

    def test_pure_eigenvector_hard_case(self):
        sol = trs_equality(np.diag([1.0, 2.0]), np.zeros(2), 1.0)
        assert sol.hard_case
        assert_allclose(np.abs(sol.x), np.array([1.0, 0.0]), atol=1e-14)
        assert sol.lam == pytest.approx(-1.0)

    def test_hard_case_with_orthogonal_rhs(self):
        # c orthogonal to the lambda_min eigenspace and r beyond the secular
        # limit: the solution picks up a minimal-eigenspace component
        s_mat = np.diag([1.0, 4.0])
        c = np.array([0.0, 2.0])
        r = 3.0
        sol = trs_equality(s_mat, c, r)
        assert sol.hard_case
        assert np.linalg.norm(sol.x) == pytest.approx(r, rel=1e-12)
        # stationarity with the augmented multiplier
        assert_allclose((s_mat + sol.lam * np.eye(2)) @ sol.x, c, atol=1e-10)

    def test_norm_constraint_and_stationarity(self, rng):
        for _ in range(200):
            n = int(rng.integers(1, 7))
            basis = rng.normal(size=(n, n))
            s_mat = basis.T @ basis
            c = rng.normal(size=n)
            r = float(rng.uniform(0.01, 10.0))
            sol = trs_equality(s_mat, c, r)
            assert abs(np.linalg.norm(sol.x) - r) <= 1e-10 * (1.0 + r)
            resid = (s_mat + sol.lam * np.eye(n)) @ sol.x - c
            assert np.linalg.norm(resid) <= 1e-8 * (1.0 + np.linalg.norm(c))
            lam_min = np.linalg.eigvalsh(s_mat)[0]
            assert sol.lam >= -lam_min - 1e-9 * (1.0 + abs(lam_min))

    def test_global_optimality_against_sphere_samples(self, rng):
        # no sampled point on the sphere beats the returned solution
        for _ in range(20):
            n = 4
            basis = rng.normal(size=(n, n))
            s_mat = basis.T @ basis
            c = rng.normal(size=n)
            r = float(rng.uniform(0.1, 5.0))
            sol = trs_equality(s_mat, c, r)
            value = sol.x @ s_mat @ sol.x - 2 * c @ sol.x
            for _ in range(200):
                z = rng.normal(size=n)
                z *= r / np.linalg.norm(z)
                assert z @ s_mat @ z - 2 * c @ z >= value - 1e-9 * (1 + abs(value))


class TestRadialValues:
    def test_matches_scalar_solver(self, rng):
        for _ in range(20):
            n = int(rng.integers(1, 6))
            basis = rng.normal(size=(n, n))
            s_mat = basis.T @ basis
            c = rng.normal(size=n)
            lam, q = np.linalg.eigh(s_mat)
            lam = np.clip(lam, 0.0, None)
            d = q.T @ c
            rs = np.concatenate([[0.0], rng.uniform(0.01, 8.0, size=40)])
            vals = radial_values(lam, d, rs)
            for r, val in zip(rs, vals):
                sol = trs_equality(s_mat, c, r, eig=(lam, q))
                direct = sol.x @ s_mat @ sol.x - 2 * c @ sol.x
                assert_allclose(val, direct, rtol=1e-8, atol=1e-10)

    def test_hard_case_branch(self):
        lam = np.array([1.0, 4.0])
        d = np.array([0.0, 2.0])
        rs = np.array([0.5, 3.0])  # secular regime, then hard case
        vals = radial_values(lam, d, rs)
        sol0 = trs_equality(np.diag(lam), np.diag([1.0, 1.0]) @ np.array([0.0, 2.0]), 0.5)
        direct0 = sol0.x @ np.diag(lam) @ sol0.x - 2 * np.array([0.0, 2.0]) @ sol0.x
        assert_allclose(vals[0], direct0, rtol=1e-9)
        sol1 = trs_equality(np.diag(lam), np.array([0.0, 2.0]), 3.0)
        direct1 = sol1.x @ np.diag(lam) @ sol1.x - 2 * np.array([0.0, 2.0]) @ sol1.x
        assert_allclose(vals[1], direct1, rtol=1e-9)

    def test_zero_rhs(self):
        lam = np.array([0.5, 2.0])
        vals = radial_values(lam, np.zeros(2), np.array([0.0, 1.0, 2.0]))
        assert_allclose(vals, [0.0, 0.5, 2.0], rtol=1e-12)
