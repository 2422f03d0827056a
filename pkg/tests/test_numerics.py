import numpy as np
import pytest

from koopmanpf.numerics import (
    RankDeficient,
    Singular,
    eig_general,
    least_squares,
    normalize_eigenvectors,
    solve_linear,
)


class TestEigGeneral:
    def test_diagonal_matrix(self):
        w, v = eig_general(np.diag([3.0, 1.0, 2.0]))
        assert sorted(w.real) == [1.0, 2.0, 3.0]
        for j in range(3):
            residual = np.diag([3.0, 1.0, 2.0]) @ v[:, j] - w[j] * v[:, j]
            assert np.max(np.abs(residual)) < 1e-12

    def test_eigenvector_residual_contract(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            a = rng.normal(size=(5, 5))
            w, v = eig_general(a)
            scale = np.max(np.abs(a))
            for j in range(5):
                res = np.max(np.abs(a @ v[:, j] - w[j] * v[:, j]))
                assert res <= 1e-10 * scale * np.max(np.abs(v[:, j]))

    def test_deterministic_normalization(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=(4, 4))
        _, v1 = eig_general(a)
        _, v2 = eig_general(a.copy())
        np.testing.assert_array_equal(v1, v2)
        for j in range(4):
            assert abs(np.linalg.norm(v1[:, j]) - 1.0) < 1e-14
            pivot = v1[np.argmax(np.abs(v1[:, j])), j]
            assert pivot.real > 0
            assert abs(pivot.imag) < 1e-14

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            eig_general(np.ones((2, 3)))

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            eig_general(np.array([[1.0, np.nan], [0.0, 1.0]]))


class TestNormalizeEigenvectors:
    def test_unit_norm_and_real_pivot(self):
        v = np.array([[1.0 + 1.0j, 2.0], [0.5, -3.0j]])
        out = normalize_eigenvectors(v)
        for j in range(2):
            assert abs(np.linalg.norm(out[:, j]) - 1.0) < 1e-14
            pivot = out[np.argmax(np.abs(out[:, j])), j]
            assert pivot.imag == pytest.approx(0.0, abs=1e-15)
            assert pivot.real > 0

    def test_zero_column_unchanged(self):
        out = normalize_eigenvectors(np.zeros((2, 1)))
        np.testing.assert_array_equal(out, np.zeros((2, 1), dtype=complex))


class TestLeastSquares:
    def test_exact_overdetermined(self):
        a = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        x_true = np.array([2.0, -1.0])
        x = least_squares(a, a @ x_true)
        np.testing.assert_allclose(x, x_true, atol=1e-12)

    def test_methods_agree_when_well_conditioned(self):
        rng = np.random.default_rng(11)
        a = rng.normal(size=(10, 3))
        b = rng.normal(size=10)
        x_qr = least_squares(a, b, method="qr")
        x_ne = least_squares(a, b, method="normal")
        np.testing.assert_allclose(x_qr, x_ne, atol=1e-10)

    def test_rank_deficient_raises_by_default(self):
        a = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
        with pytest.raises(RankDeficient):
            least_squares(a, np.array([1.0, 2.0, 3.0]))

    def test_rank_deficient_min_norm(self):
        a = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
        b = a @ np.array([1.0, 2.0])
        x = least_squares(a, b, rank_policy="min_norm")
        np.testing.assert_allclose(a @ x, b, atol=1e-10)
        # minimum-norm solution lies along the row space direction (1, 2)
        assert abs(x[1] - 2 * x[0]) < 1e-10

    def test_rejects_wide_matrix(self):
        with pytest.raises(ValueError):
            least_squares(np.ones((2, 3)), np.ones(2))

    def test_rejects_unknown_options(self):
        a = np.eye(2)
        with pytest.raises(ValueError):
            least_squares(a, np.ones(2), method="lu")
        with pytest.raises(ValueError):
            least_squares(a, np.ones(2), rank_policy="pad")


class TestSolveLinear:
    def test_right_division(self):
        t = np.array([[2.0, 1.0], [0.0, 3.0]])
        x_true = np.array([[1.0, -1.0], [0.5, 2.0]])
        x = solve_linear(t, x_true @ t)
        np.testing.assert_allclose(x, x_true, atol=1e-12)

    def test_complex_right_division(self):
        rng = np.random.default_rng(5)
        t = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        x_true = rng.normal(size=(2, 3)) + 1j * rng.normal(size=(2, 3))
        x = solve_linear(t, x_true @ t)
        np.testing.assert_allclose(x, x_true, atol=1e-10)

    def test_singular_raises(self):
        with pytest.raises(Singular):
            solve_linear(np.array([[1.0, 2.0], [2.0, 4.0]]), np.eye(2))
