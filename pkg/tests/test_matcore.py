import numpy as np
import pytest

from sicperf.src.matcore import (MatrixShapeError, NotHermitianError, SingularMatrixError,
                                 col_norms_sq, qr_decompose, qr_decompose_batch, solve_hpd)


def _random_complex(rng, shape):
    return (rng.standard_normal(shape) + 1j*rng.standard_normal(shape))/np.sqrt(2.0)


class TestQrDecompose:

    def test_identity(self):
        factors = qr_decompose(np.eye(3))
        np.testing.assert_allclose(factors.q, np.eye(3), atol=1e-12)
        np.testing.assert_allclose(factors.r, np.eye(3), atol=1e-12)

    def test_single_column_norm(self):
        factors = qr_decompose(np.array([[3.0], [4.0]]))
        assert factors.r[0, 0].real == pytest.approx(5.0)
        assert factors.diag_sq[0] == pytest.approx(25.0)

    def test_reconstruction_and_unitarity(self):
        rng = np.random.default_rng(7)
        for shape in [(4, 4), (6, 3), (8, 8)]:
            a = _random_complex(rng, shape)
            factors = qr_decompose(a)
            assert np.max(np.abs(factors.q @ factors.r - a)) <= 1e-10
            assert np.max(np.abs(factors.q.conj().T @ factors.q - np.eye(shape[0]))) <= 1e-10
            diagonal = np.diagonal(factors.r)
            assert np.all(np.abs(diagonal.imag) <= 1e-12)
            assert np.all(diagonal.real >= 0.0)
            assert np.allclose(np.tril(factors.r[:shape[1]], -1), 0.0)

    def test_random_shapes(self):
        rng = np.random.default_rng(8)
        for _ in range(1000):
            cols = int(rng.integers(1, 9))
            rows = int(rng.integers(cols, 9))
            a = _random_complex(rng, (rows, cols))
            factors = qr_decompose(a)
            assert np.max(np.abs(factors.q @ factors.r - a)) <= 1e-10
            assert np.max(np.abs(factors.q.conj().T @ factors.q - np.eye(rows))) <= 1e-10
            assert np.max(np.abs(np.tril(factors.r, -1))) <= 1e-10
            assert np.all(np.diagonal(factors.r).real >= 0.0)

    def test_wide_matrix_rejected(self):
        with pytest.raises(MatrixShapeError):
            qr_decompose(np.ones((2, 3)))

    def test_batch_matches_single(self):
        rng = np.random.default_rng(11)
        stack = _random_complex(rng, (5, 4, 3))
        batch = qr_decompose_batch(stack)
        for k in range(5):
            single = qr_decompose(stack[k])
            np.testing.assert_allclose(batch.diag_sq[k], single.diag_sq, rtol=1e-12)


class TestSolveHpd:

    def test_identity(self):
        b = np.array([1.0 + 2.0j, -3.0])
        np.testing.assert_allclose(solve_hpd(np.eye(2), b), b)

    def test_scaling(self):
        np.testing.assert_allclose(solve_hpd(2.0*np.eye(2), np.array([4.0, 6.0])), [2.0, 3.0])

    def test_quadratic_form_matches_adjugate_inverse(self):
        rng = np.random.default_rng(3)
        h = _random_complex(rng, (2, 2))
        c, d = 1.3, 0.4
        a = c*(h @ h.conj().T) + d*np.eye(2)
        adjugate = np.array([[a[1, 1], -a[0, 1]], [-a[1, 0], a[0, 0]]])
        inverse = adjugate/(a[0, 0]*a[1, 1] - a[0, 1]*a[1, 0])
        target = h[:, 0]
        expected = np.vdot(target, inverse @ target)
        assert np.vdot(target, solve_hpd(a, target)) == pytest.approx(expected, rel=1e-12)

    def test_residual(self):
        rng = np.random.default_rng(5)
        h = _random_complex(rng, (6, 4))
        a = h @ h.conj().T + 0.1*np.eye(6)
        b = _random_complex(rng, 6)
        x = solve_hpd(a, b)
        assert np.linalg.norm(a @ x - b) <= 1e-9*np.linalg.norm(b)

    def test_not_hermitian(self):
        with pytest.raises(NotHermitianError):
            solve_hpd(np.array([[2.0, 1.0], [0.0, 2.0]]), np.ones(2))

    def test_singular(self):
        with pytest.raises(SingularMatrixError):
            solve_hpd(np.array([[1.0, 1.0], [1.0, 1.0]]), np.ones(2))


def test_col_norms_sq():
    a = np.array([[3.0, 1j], [4.0, 1.0]])
    np.testing.assert_allclose(col_norms_sq(a), [25.0, 2.0])
