"""Small dense complex linear algebra.

The singular value decomposition is a one-sided (Hestenes) Jacobi iteration
that orthogonalises the columns of ``A`` and therefore diagonalises ``A^H A``
implicitly.  Column pairs are processed in round-robin order so that every
round rotates ``n/2`` disjoint pairs at once with array operations.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import InvalidInput, SingularMatrix
from .tolerances import TOL

__all__ = [
    "as_cmatrix",
    "singular_values",
    "svd_jacobi",
    "smin",
    "solve_square",
    "expm_traceless2",
    "hermitian_eigenvalues",
    "J",
]

#: Standard symplectic matrix ``[[0, -1], [1, 0]]``.
J = np.array([[0.0, -1.0], [1.0, 0.0]], dtype=complex)


def as_cmatrix(A) -> np.ndarray:
    """Return ``A`` as a 2-D complex array, rejecting empty or non-finite input."""
    M = np.asarray(A, dtype=complex)
    if M.ndim == 1:
        M = M[:, None]
    if M.ndim != 2 or M.size == 0:
        raise InvalidInput(f"expected a nonempty matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidInput("matrix has non-finite entries")
    return M


@lru_cache(maxsize=64)
def _round_robin(n: int) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    # circle method; index n (when n is odd) is a bye
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        p, q = [], []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a < n and b < n:
                p.append(min(a, b))
                q.append(max(a, b))
        rounds.append((np.array(p, dtype=int), np.array(q, dtype=int)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return tuple(rounds)


def _hestenes(A: np.ndarray, want_v: bool):
    """Orthogonalise the columns of a tall matrix ``A`` (rows >= cols)."""
    # columns of A are stored as contiguous rows of G for cheap gathers
    G = np.ascontiguousarray(A.T)
    n = G.shape[0]
    V = np.eye(n, dtype=complex) if want_v else None
    if n == 1:
        return G.T, V
    rounds = _round_robin(n)
    # couplings below roundoff of the whole matrix cannot move any singular
    # value above the noise level; without this floor, numerically null
    # columns keep rotating forever
    floor = (4 * np.finfo(float).eps * np.linalg.norm(G)) ** 2
    for _ in range(TOL.jacobi_max_sweeps):
        off = 0.0
        for P, Q in rounds:
            gp, gq = G[P], G[Q]
            alpha = np.einsum("ij,ij->i", gp.conj(), gp).real
            beta = np.einsum("ij,ij->i", gq.conj(), gq).real
            gamma = np.einsum("ij,ij->i", gp.conj(), gq)
            ag = np.abs(gamma)
            scale = np.sqrt(alpha * beta)
            active = (ag > TOL.jacobi_offdiag * scale) & (ag > floor)
            if not np.any(active):
                continue
            off = max(off, float(np.max(ag[active] / scale[active])))
            P, Q = P[active], Q[active]
            alpha, beta, gamma, ag = alpha[active], beta[active], gamma[active], ag[active]
            phase = (gamma / ag)[:, None]
            zeta = (beta - alpha) / (2.0 * ag)
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            c = (1.0 / np.sqrt(1.0 + t * t))[:, None]
            s = c * t[:, None]
            gp = G[P]
            gq = G[Q] * phase.conj()
            G[P] = c * gp - s * gq
            G[Q] = s * gp + c * gq
            if want_v:
                vp = V[:, P]
                vq = V[:, Q] * phase.T.conj()
                V[:, P] = c.T * vp - s.T * vq
                V[:, Q] = s.T * vp + c.T * vq
        if off <= TOL.jacobi_offdiag:
            break
    return G.T, V


def svd_jacobi(A):
    """Thin singular value decomposition by one-sided Jacobi.

    Returns
    -------
    U : ndarray, shape (m, k)
    s : ndarray, shape (k,)
        Singular values in descending order, ``k = min(m, n)``.
    V : ndarray, shape (n, k)
        Right singular vectors as columns, so that ``A ~= U @ diag(s) @ V^H``.
    """
    A = as_cmatrix(A)
    m, n = A.shape
    if m < n:
        U, s, V = svd_jacobi(A.conj().T)
        return V, s, U
    G, V = _hestenes(A, want_v=True)
    s = np.linalg.norm(G, axis=0)
    order = np.argsort(-s, kind="stable")
    s = s[order]
    G = G[:, order]
    V = V[:, order]
    U = np.zeros_like(G)
    nz = s > 0
    U[:, nz] = G[:, nz] / s[nz]
    return U, s, V


def singular_values(A) -> np.ndarray:
    """All ``min(rows, cols)`` singular values of ``A``, descending."""
    A = as_cmatrix(A)
    if A.shape[0] < A.shape[1]:
        A = A.conj().T
    G, _ = _hestenes(A, want_v=False)
    return np.sort(np.linalg.norm(G, axis=0))[::-1]


def smin(A) -> float:
    """Smallest singular value on the domain dimension (zero if rank deficient).

    For a wide matrix the domain has more dimensions than the range, so the
    map has a kernel and the value is 0.
    """
    A = as_cmatrix(A)
    if A.shape[1] > A.shape[0]:
        return 0.0
    return float(singular_values(A)[-1])


def solve_square(A, b) -> np.ndarray:
    """Solve ``A x = b`` by Gaussian elimination with partial pivoting."""
    A = as_cmatrix(A)
    n = A.shape[0]
    if A.shape[1] != n:
        raise InvalidInput(f"solve_square needs a square matrix, got {A.shape}")
    b = np.asarray(b, dtype=complex)
    vector = b.ndim == 1
    B = b.reshape(n, -1).copy()
    if not np.all(np.isfinite(B)):
        raise InvalidInput("right-hand side has non-finite entries")
    U = A.copy()
    floor = TOL.pivot_rel * np.linalg.norm(A)
    for k in range(n):
        p = k + int(np.argmax(np.abs(U[k:, k])))
        if abs(U[p, k]) <= floor:
            raise SingularMatrix(f"pivot {abs(U[p, k]):.3e} below {floor:.3e} at column {k}")
        if p != k:
            U[[k, p]] = U[[p, k]]
            B[[k, p]] = B[[p, k]]
        f = U[k + 1:, k] / U[k, k]
        U[k + 1:, k:] -= np.outer(f, U[k, k:])
        B[k + 1:] -= np.outer(f, B[k])
    X = np.zeros_like(B)
    for k in range(n - 1, -1, -1):
        X[k] = (B[k] - U[k, k + 1:] @ X[k + 1:]) / U[k, k]
    return X[:, 0] if vector else X


def _sinc(mu):
    mu = np.asarray(mu, dtype=complex)
    small = np.abs(mu) < TOL.sinc_series_cutoff
    safe = np.where(small, 1.0, mu)
    mu2 = mu * mu
    return np.where(small, 1.0 - mu2 / 6.0 + mu2 * mu2 / 120.0, np.sin(safe) / safe)


def expm_traceless2(A, check: bool = True) -> np.ndarray:
    """Matrix exponential of traceless 2x2 matrices.

    Uses ``exp(A) = cos(mu) I + sin(mu)/mu A`` with ``mu**2 = det A``.  Both
    terms are even in ``mu`` so the branch of the square root is irrelevant.
    Accepts a single matrix or a stack with shape ``(..., 2, 2)``.
    """
    A = np.asarray(A, dtype=complex)
    if A.shape[-2:] != (2, 2):
        raise InvalidInput(f"expected 2x2 matrices, got shape {A.shape}")
    if check:
        if not np.all(np.isfinite(A)):
            raise InvalidInput("matrix has non-finite entries")
        tr = np.abs(A[..., 0, 0] + A[..., 1, 1])
        opn = np.linalg.norm(A, ord=2, axis=(-2, -1)) if A.ndim > 2 else np.linalg.norm(A, 2)
        if np.any(tr > TOL.trace_rel * np.maximum(opn, 1e-300)):
            raise InvalidInput("expm_traceless2 requires a traceless matrix")
    det = A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0]
    mu = np.sqrt(det)
    c = np.cos(mu)[..., None, None]
    sc = _sinc(mu)[..., None, None]
    return c * np.eye(2) + sc * A


def hermitian_eigenvalues(A) -> np.ndarray:
    """Ascending eigenvalues of a Hermitian matrix (LAPACK ``heevd``)."""
    A = as_cmatrix(A)
    return np.linalg.eigvalsh(0.5 * (A + A.conj().T))
