"""Dense linear algebra helpers: eigendecomposition, Hadamard identity, solves."""

import numpy as np
import pytest

from dualris.errors import NumericalError, ShapeError
from dualris.numerics import (
    EIG_RECONSTRUCTION_TOL,
    HERMITIAN_TOL,
    SOLVE_RESIDUAL_TOL,
    UNITARITY_TOL,
    hadamard,
    hermitian_eig,
    solve_hpd,
    trace,
)


def random_hermitian(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (a + a.conj().T)


def random_psd(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return a @ a.conj().T


class TestHermitianEig:
    def test_identity_eigenvalues(self):
        eig = hermitian_eig(np.eye(3))
        assert np.allclose(eig.eigenvalues, [1.0, 1.0, 1.0], atol=1e-14)
        # any orthonormal basis is acceptable for a repeated eigenvalue
        t = eig.eigenvectors
        assert np.max(np.abs(t.conj().T @ t - np.eye(3))) <= UNITARITY_TOL

    def test_two_by_two_characteristic_roots(self):
        eig = hermitian_eig(np.array([[2.0, 1.0], [1.0, 2.0]]))
        assert np.allclose(eig.eigenvalues, [1.0, 3.0], atol=1e-12)

    def test_random_reconstruction(self):
        rng = np.random.default_rng(7)
        a = random_hermitian(rng, 8)
        eig = hermitian_eig(a)
        recon = eig.eigenvectors @ np.diag(eig.eigenvalues) @ eig.eigenvectors.conj().T
        rel = np.linalg.norm(recon - a) / np.linalg.norm(a)
        assert rel < EIG_RECONSTRUCTION_TOL

    def test_unitarity_and_ordering(self):
        rng = np.random.default_rng(8)
        for _ in range(5):
            eig = hermitian_eig(random_hermitian(rng, 6))
            t = eig.eigenvectors
            assert np.max(np.abs(t.conj().T @ t - np.eye(6))) <= UNITARITY_TOL
            assert np.all(np.diff(eig.eigenvalues) >= 0.0)
            assert np.isrealobj(eig.eigenvalues)

    def test_psd_eigenvalues_nonnegative(self):
        rng = np.random.default_rng(9)
        for _ in range(5):
            eig = hermitian_eig(random_psd(rng, 5))
            assert eig.eigenvalues[0] >= -1e-10

    def test_rejects_non_hermitian(self):
        a = np.array([[1.0, 2.0], [0.0, 1.0]])
        with pytest.raises(ShapeError):
            hermitian_eig(a)

    def test_accepts_roundoff_asymmetry(self):
        rng = np.random.default_rng(10)
        a = random_hermitian(rng, 4)
        a[0, 1] += 0.5 * HERMITIAN_TOL
        eig = hermitian_eig(a)
        assert eig.eigenvalues.size == 4

    def test_rejects_non_square(self):
        with pytest.raises(DimensionError):
            hermitian_eig(np.ones((2, 3)))


class TestHadamard:
    def test_ones_is_identity_element(self):
        rng = np.random.default_rng(11)
        a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        assert np.array_equal(hadamard(a, np.ones((3, 3))), a)

    def test_zeros_annihilate(self):
        rng = np.random.default_rng(12)
        a = rng.standard_normal((4, 4))
        assert np.all(hadamard(a, np.zeros((4, 4))) == 0)

    def test_diagonal_trace_identity(self):
        # tr(Phi^H A Phi B) = phi^H (A . B^T) phi for Phi = diag(phi)
        rng = np.random.default_rng(13)
        a = random_psd(rng, 4)
        b = random_psd(rng, 4)
        m = hadamard(a, b.T)
        for _ in range(10):
            phi = np.exp(2j * np.pi * rng.random(4))
            big_phi = np.diag(phi)
            lhs = np.trace(big_phi.conj().T @ a @ big_phi @ b)
            rhs = np.vdot(phi, m @ phi)
            assert abs(lhs - rhs) < 1e-10


class TestTrace:
    def test_identity(self):
        assert trace(np.eye(5)) == 5

    def test_complex_diagonal(self):
        assert trace(np.diag([1 + 1j, 2 - 1j])) == 3 + 0j

    def test_cyclic_property(self):
        rng = np.random.default_rng(14)
        a = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
        b = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))
        assert abs(trace(a @ b) - trace(b @ a)) < 1e-12


class TestSolveHpd:
    def test_identity_system(self):
        rng = np.random.default_rng(15)
        b = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
        assert np.allclose(solve_hpd(np.eye(4), b), b, atol=1e-14)

    def test_scaled_identity(self):
        rng = np.random.default_rng(16)
        b = rng.standard_normal((3, 3))
        assert np.allclose(solve_hpd(2.0 * np.eye(3), b), b / 2.0, atol=1e-14)

    def test_residual_on_random_hpd(self):
        rng = np.random.default_rng(17)
        r = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        a = r.conj().T @ r + np.eye(6)
        b = rng.standard_normal((6, 2)) + 1j * rng.standard_normal((6, 2))
        x = solve_hpd(a, b)
        rel = np.linalg.norm(a @ x - b) / np.linalg.norm(b)
        assert rel < SOLVE_RESIDUAL_TOL

    def test_solve_then_multiply_roundtrip(self):
        rng = np.random.default_rng(18)
        for _ in range(5):
            r = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
            a = r.conj().T @ r + np.eye(5)
            b = rng.standard_normal((5, 1)) + 1j * rng.standard_normal((5, 1))
            x = solve_hpd(a, b)
            assert np.linalg.norm(a @ x - b) / np.linalg.norm(b) < 1e-9

    def test_rejects_indefinite(self):
        with pytest.raises(NumericalError):
            solve_hpd(np.diag([1.0, -1.0]), np.ones((2, 1)))
