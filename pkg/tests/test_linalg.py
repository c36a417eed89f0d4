import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from canonseam.errors import InvalidInput, SingularMatrix
from canonseam.linalg import (
    J,
    expm_traceless2,
    hermitian_eigenvalues,
    singular_values,
    smin,
    solve_square,
    svd_jacobi,
)
from oracles import taylor_expm

seeds = st.integers(0, 2**32 - 1)


def cmat(rng, m, n):
    return rng.normal(size=(m, n)) + 1j * rng.normal(size=(m, n))


def givens_unitary(rng):
    th, a, b = rng.uniform(0, 2 * np.pi, 3)
    c, s = np.cos(th), np.sin(th)
    return np.array([[c * np.exp(1j * a), -s * np.exp(-1j * b)], [s * np.exp(1j * b), c * np.exp(-1j * a)]])


class TestSingularValues:
    def test_identity(self):
        assert_allclose(singular_values(np.eye(2)), [1, 1], atol=1e-15)

    def test_diagonal(self):
        assert_allclose(singular_values(np.diag([3, 4j])), [4, 3], atol=1e-14)

    @given(seeds)
    def test_tall_matches_gram_eigenvalues(self, seed):
        rng = np.random.default_rng(seed)
        A = cmat(rng, 5, 3)
        ref = np.sqrt(np.sort(np.linalg.eigvalsh(A.conj().T @ A))[::-1])
        assert_allclose(singular_values(A), ref, rtol=1e-10)

    @given(seeds)
    def test_wide_has_min_dimension_many(self, seed):
        A = cmat(np.random.default_rng(seed), 3, 6)
        s = singular_values(A)
        assert s.shape == (3,)
        assert np.all(np.diff(s) <= 0) and np.all(s >= 0)
        assert smin(A) == 0.0

    @given(seeds)
    def test_unitary_invariance(self, seed):
        rng = np.random.default_rng(seed)
        A = cmat(rng, 2, 2)
        U, V = givens_unitary(rng), givens_unitary(rng)
        assert_allclose(singular_values(U @ A @ V), singular_values(A), rtol=1e-10, atol=1e-12)

    @given(seeds)
    def test_product_bound(self, seed):
        rng = np.random.default_rng(seed)
        A, B, C = (cmat(rng, 4, 4) for _ in range(3))
        assert smin(A @ B @ C) >= smin(A) * smin(B) * smin(C) * (1 - 1e-10)

    def test_svd_reconstructs(self, rng):
        for shape in [(6, 4), (4, 6), (9, 9)]:
            A = cmat(rng, *shape)
            U, s, V = svd_jacobi(A)
            assert_allclose(U @ np.diag(s) @ V.conj().T, A, atol=1e-12)
            assert_allclose(V.conj().T @ V, np.eye(V.shape[1]), atol=1e-12)

    def test_rank_deficient_columns_converge(self, rng):
        A = cmat(rng, 30, 30)
        A[:, :10] = 0.0
        s = singular_values(A)
        assert_allclose(s, np.linalg.svd(A, compute_uv=False), atol=1e-12)
        assert np.all(s[-10:] == 0.0)

    def test_rejects_nonfinite(self):
        with pytest.raises(InvalidInput):
            singular_values(np.array([[1.0, np.nan]]))


class TestSolve:
    def test_identity(self, rng):
        b = rng.normal(size=4) + 1j * rng.normal(size=4)
        assert_allclose(solve_square(np.eye(4), b), b)

    def test_diagonal(self):
        assert_allclose(solve_square(np.diag([2, 1j]), [2, 1j]), [1, 1])

    @given(seeds)
    def test_residual(self, seed):
        rng = np.random.default_rng(seed)
        A = cmat(rng, 8, 8) + 8 * np.eye(8)
        b = rng.normal(size=8) + 1j * rng.normal(size=8)
        x = solve_square(A, b)
        assert np.linalg.norm(A @ x - b) <= 1e-10 * (np.linalg.norm(A) * np.linalg.norm(x) + np.linalg.norm(b))

    def test_singular(self):
        with pytest.raises(SingularMatrix):
            solve_square(np.array([[1.0, 2.0], [2.0, 4.0]]), [1.0, 1.0])

    def test_matrix_rhs(self, rng):
        A = cmat(rng, 5, 5)
        B = cmat(rng, 5, 3)
        assert_allclose(A @ solve_square(A, B), B, atol=1e-11)


class TestExpm:
    def test_zero(self):
        assert_allclose(expm_traceless2(np.zeros((2, 2))), np.eye(2))

    @pytest.mark.parametrize("z", [0.7 + 0.3j, 2.0, -1.5j])
    def test_free_propagator(self, z):
        ell = 0.8
        E = expm_traceless2(-(z / 2) * J * ell)
        c, s = np.cos(z * ell / 2), np.sin(z * ell / 2)
        assert_allclose(E, [[c, s], [-s, c]], atol=1e-14)

    @given(seeds)
    def test_matches_taylor_oracle(self, seed):
        rng = np.random.default_rng(seed)
        a, b, c = rng.normal(size=3) + 1j * rng.normal(size=3)
        A = np.array([[a, b], [c, -a]])
        A *= rng.uniform(0, 2) / np.linalg.norm(A, 2)
        assert_allclose(expm_traceless2(A), taylor_expm(A), atol=1e-10)
        assert abs(np.linalg.det(expm_traceless2(A)) - 1) <= 1e-10

    @given(seeds)
    def test_inverse_pair(self, seed):
        rng = np.random.default_rng(seed)
        a, b, c = rng.normal(size=3) + 1j * rng.normal(size=3)
        A = np.array([[a, b], [c, -a]])
        A *= 2 * rng.uniform() / np.linalg.norm(A, 2)
        assert_allclose(expm_traceless2(A) @ expm_traceless2(-A), np.eye(2), atol=1e-10)

    def test_branch_invariance(self, rng):
        # cos and sin(mu)/mu are even in mu, so flipping the root changes nothing
        a, b, c = rng.normal(size=3) + 1j * rng.normal(size=3)
        A = np.array([[a, b], [c, -a]])
        mu = np.sqrt(np.linalg.det(A))
        for root in (mu, -mu):
            E = np.cos(root) * np.eye(2) + np.sin(root) / root * A
            assert_allclose(expm_traceless2(A), E, atol=1e-13)

    def test_small_mu_series(self):
        A = np.array([[1e-6, 2e-6], [-3e-6, -1e-6]], dtype=complex)
        assert_allclose(expm_traceless2(A), taylor_expm(A), atol=1e-16)

    def test_rejects_trace(self):
        with pytest.raises(InvalidInput):
            expm_traceless2(np.eye(2))

    def test_stacked(self, rng):
        A = rng.normal(size=(3, 4, 2, 2)) + 0j
        A[..., 1, 1] = -A[..., 0, 0]
        E = expm_traceless2(A)
        assert E.shape == A.shape
        assert_allclose(E[1, 2], taylor_expm(A[1, 2]), atol=1e-12)


def test_hermitian_eigenvalues(rng):
    A = cmat(rng, 5, 5)
    H = A + A.conj().T
    ev = hermitian_eigenvalues(H)
    assert np.all(np.diff(ev) >= 0)
    assert_allclose(np.sort(np.abs(ev)), np.sort(singular_values(H)), rtol=1e-10)
