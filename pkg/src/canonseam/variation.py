"""First-order perturbation theory for the Weyl coefficient and Schur function.

Directions are traceless, ``Delta H = X(q)``, with ``q`` constant on each cell of
the base Hamiltonian.  Integrals over a cell are done with 8-point
Gauss-Legendre on the exact per-cell solution, which is entire in ``s``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .canonical import (
    X,
    BlockHamiltonian,
    prefix_products,
    suffix_products,
    weyl_m,
)
from .errors import DenominatorCollapse, InvalidInput, OutOfDomain
from .linalg import J, expm_traceless2
from .tolerances import TOL

__all__ = [
    "TracelessDirection",
    "RemainderBudget",
    "phi_from_zero",
    "phi_to_end",
    "weyl_solution",
    "dm_pairing",
    "dv_pairing",
    "two_kernel_coeffs",
    "dm_two_kernel",
    "dv_free",
    "duhamel_first",
    "remainder_budget",
    "robust_kernels",
    "dv_robust",
    "GL_ORDER",
]

GL_ORDER = 8
_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)


@dataclass(frozen=True)
class TracelessDirection:
    """Per-cell complex amplitudes ``q_j`` of ``Delta H = X(q)``."""

    values: np.ndarray

    def __post_init__(self):
        q = np.array(self.values, dtype=complex).reshape(-1)
        if not np.all(np.isfinite(q)):
            raise InvalidInput("direction must be finite")
        q.setflags(write=False)
        object.__setattr__(self, "values", q)

    def l1_norm(self, ell: float) -> float:
        # operator norm of X(q) is |q|
        return float(ell * np.sum(np.abs(self.values)))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


def _direction(q, H: BlockHamiltonian) -> np.ndarray:
    if isinstance(q, TracelessDirection):
        q = q.values
    q = np.asarray(q, dtype=complex).reshape(-1)
    if q.size != H.N:
        raise InvalidInput(f"direction has {q.size} cells, Hamiltonian has {H.N}")
    if not np.all(np.isfinite(q)):
        raise InvalidInput("direction must be finite")
    return q


def _grid(H: BlockHamiltonian, grid) -> np.ndarray:
    s = np.asarray(grid, dtype=float).reshape(-1)
    tol = 1e-12 * H.Lambda
    if np.any(s < -tol) or np.any(s > H.Lambda + tol):
        raise OutOfDomain(f"grid points must lie in [0, {H.Lambda}]")
    return np.clip(s, 0.0, H.Lambda)


def _gl_points(H: BlockHamiltonian, z: complex):
    """Quadrature nodes ``(N, 8 P)`` and weights ``(8 P,)`` for every cell.

    Integrands oscillate like ``e^{2 i z s}``, so each cell is split into
    ``P = ceil(|z| l)`` panels to keep eight nodes per panel at roundoff.
    """
    panels = max(1, int(np.ceil(abs(z) * H.ell)))
    h = H.ell / panels
    local = (np.arange(panels)[:, None] * h + 0.5 * h * (1.0 + _GL_X)[None, :]).reshape(-1)
    s = H.breakpoints[:-1, None] + local[None, :]
    return s, np.tile(0.5 * h * _GL_W, panels)


def _partial(H: BlockHamiltonian, cells: np.ndarray, lengths: np.ndarray, z: complex) -> np.ndarray:
    gen = -(z * lengths)[..., None, None] * (J.real @ H.matrices()[cells])
    return expm_traceless2(gen, check=False)


def phi_from_zero(H: BlockHamiltonian, z: complex, s) -> np.ndarray:
    """``Phi(s, 0; z)`` at every point of ``s`` (any shape), shape ``s.shape + (2, 2)``."""
    s = np.asarray(s, dtype=float)
    pre = prefix_products(H, complex(z))
    c = H.cell_of(s)
    return _partial(H, c, s - H.breakpoints[c], complex(z)) @ pre[c]


def phi_to_end(H: BlockHamiltonian, z: complex, s) -> np.ndarray:
    """``Phi(Lambda, s; z)`` at every point of ``s``, shape ``s.shape + (2, 2)``."""
    s = np.asarray(s, dtype=float)
    suf = suffix_products(H, complex(z))
    c = H.cell_of(s)
    return suf[c + 1] @ _partial(H, c, H.breakpoints[c + 1] - s, complex(z))


def weyl_solution(H: BlockHamiltonian, z: complex, grid) -> np.ndarray:
    """Weyl solution ``Y(s) = Phi(s, 0)(1, m)``; returns shape ``(len(grid), 2)``."""
    m = weyl_m(H, z)
    s = _grid(H, grid)
    return phi_from_zero(H, z, s) @ np.array([1.0, m])


def _weyl_solution_gl(H: BlockHamiltonian, z: complex):
    s, w = _gl_points(H, z)
    m = weyl_m(H, z)
    Y = phi_from_zero(H, z, s) @ np.array([1.0, m])
    return Y, w


def dm_pairing(H: BlockHamiltonian, z: complex, q) -> complex:
    """``Dm[Delta H] = z int Y^T Delta H Y ds``."""
    q = _direction(q, H)
    Y, w = _weyl_solution_gl(H, z)
    Xq = X(q)  # (N, 2, 2)
    quad = np.einsum("cki,cij,ckj->ck", Y, Xq, Y)
    return complex(z * np.sum(quad @ w))


def dv_pairing(H: BlockHamiltonian, z: complex, q) -> complex:
    """``Dv = Dm * 2i/(m + i)^2`` by the chain rule through the Cayley map."""
    m = weyl_m(H, z)
    return dm_pairing(H, z, q) * 2j / (m + 1j) ** 2


def two_kernel_coeffs(H: BlockHamiltonian, z: complex, grid):
    """Coordinates ``(a, b)`` of ``Y = a u+ + b u-``."""
    Y = weyl_solution(H, z, grid)
    a = 0.5 * (Y[:, 0] - 1j * Y[:, 1])
    b = 0.5 * (Y[:, 0] + 1j * Y[:, 1])
    return a, b


def dm_two_kernel(H: BlockHamiltonian, z: complex, q) -> complex:
    """``Dm = 2z int (q a^2 + conj(q) b^2) ds``."""
    q = _direction(q, H)
    Y, w = _weyl_solution_gl(H, z)
    a = 0.5 * (Y[..., 0] - 1j * Y[..., 1])
    b = 0.5 * (Y[..., 0] + 1j * Y[..., 1])
    integrand = q[:, None] * a**2 + np.conj(q)[:, None] * b**2
    return complex(2 * z * np.sum(integrand @ w))


def dv_free(q, Lambda: float, z):
    """Derivative of ``v`` at the free Hamiltonian: ``-iz int q(s) e^{izs} ds``.

    ``q`` holds amplitudes on equal cells of ``[0, Lambda]``; broadcasts over ``z``.
    """
    if isinstance(q, TracelessDirection):
        q = q.values
    q = np.asarray(q, dtype=complex).reshape(-1)
    if q.size == 0:
        raise InvalidInput("direction must have at least one cell")
    if not Lambda > 0:
        raise InvalidInput("Lambda must be positive")
    za = np.asarray(z, dtype=complex)
    ell = Lambda / q.size
    starts = ell * np.arange(q.size)
    iz = 1j * za[..., None]
    # -iz q int_a^{a+l} e^{izs} ds = -q e^{iza} (e^{izl} - 1)
    per_cell = -q * np.exp(iz * starts) * np.expm1(iz * ell)
    out = per_cell.sum(axis=-1)
    return complex(out) if out.ndim == 0 else out


def duhamel_first(H: BlockHamiltonian, z: complex, q) -> np.ndarray:
    """First variation ``-z int Phi(Lambda, s) J Delta H(s) Phi(s, 0) ds``."""
    q = _direction(q, H)
    s, w = _gl_points(H, z)
    left = phi_to_end(H, z, s)
    right = phi_from_zero(H, z, s)
    mid = J.real @ X(q)  # (N, 2, 2)
    integrand = left @ mid[:, None, :, :] @ right
    return -complex(z) * np.einsum("ckij,k->ij", integrand, w)


@dataclass(frozen=True)
class RemainderBudget:
    z: complex
    Lambda: float
    C1: float
    C2: float
    r_m: float
    C: float


def remainder_budget(z: complex, Lambda: float) -> RemainderBudget:
    """Explicit Duhamel constants and the quadratic-remainder radius."""
    z = complex(z)
    if z.imag <= 0:
        raise OutOfDomain("remainder budget needs Im z > 0")
    if not Lambda > 0:
        raise InvalidInput("Lambda must be positive")
    az = abs(z)
    if az < TOL.min_abs_z:
        raise OutOfDomain(f"|z| = {az:.3e} is below {TOL.min_abs_z}: r_m blows up")
    L = float(Lambda)
    C1 = az * L * np.exp(2 * az * L)
    C2 = 2 * az**2 * L**2 * np.exp(3 * az * L)
    r_m = np.exp(-2 * az * L) * np.exp(z.imag * L / 2) / (8 * az)
    C = 64 * az**2 * np.exp(6 * az * L) * np.exp(-z.imag * L / 2)
    return RemainderBudget(z, L, float(C1), float(C2), float(r_m), float(C))


_P = np.array([[1.0, 1.0], [1.0j, -1.0j]])
_P_INV = 0.5 * np.array([[1.0, -1.0j], [1.0, 1.0j]])


def _rotated(P):
    return _P_INV @ P @ _P


def robust_kernels(H: BlockHamiltonian, z: complex, grid):
    """Depth kernels ``(K1, K2)`` with ``Dv = -iz int (q K1 + conj(q) K2) ds``.

    Works in the ``(u+, u-)`` frame ``Phi~ = P^-1 Phi P``.  At the free
    Hamiltonian ``K1 = e^{izs}`` and ``K2 = 0``.
    """
    s = _grid(H, grid)
    return _robust_kernels_at(H, complex(z), s)


def _robust_kernels_at(H: BlockHamiltonian, z: complex, s: np.ndarray):
    full = _rotated(prefix_products(H, z)[H.N])
    den = full[1, 1]
    if abs(den) < TOL.kernel_denominator:
        raise DenominatorCollapse("rotated transfer entry Phi~_22(Lambda, 0) vanishes")
    v = full[1, 0] / den
    L = _rotated(phi_to_end(H, z, s))
    R = _rotated(phi_from_zero(H, z, s))
    K1 = L[..., 1, 1] * (R[..., 0, 0] - v * R[..., 0, 1]) / den
    K2 = -L[..., 1, 0] * (R[..., 1, 0] - v * R[..., 1, 1]) / den
    return K1, K2


def dv_robust(H: BlockHamiltonian, z: complex, q) -> complex:
    """``Dv`` assembled from the depth kernels."""
    q = _direction(q, H)
    s, w = _gl_points(H, z)
    K1, K2 = _robust_kernels_at(H, complex(z), s)
    integrand = q[:, None] * K1 + np.conj(q)[:, None] * K2
    return complex(-1j * z * np.sum(integrand @ w))
