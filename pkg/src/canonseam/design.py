"""Sampling-design diagnostics for the free-point block Jacobian.

With ``theta_k = x_k l`` the Fourier block ``F`` has Gram matrix
``(F^H F)_{jj'} = M mu(j' - j)`` where ``mu(r) = (1/M) sum_k e^{i r theta_k}``;
equispaced phases make every ``mu(r)``, ``0 < |r| < M``, vanish, so ``F`` is a
tight frame.  The smallest singular value of ``T = D_gamma F D_w`` is then
bracketed between closed forms that differ only through the row factor.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import InvalidInput
from .linalg import hermitian_eigenvalues, singular_values, smin
from .seam import JacobianFactors, SeamDesign, jacobian_block_free
from .tolerances import TOL

__all__ = [
    "JacobianFactors",
    "SandwichReport",
    "NearTightnessReport",
    "RigidityReport",
    "equispaced_design",
    "half_shift_design",
    "is_half_shift",
    "fourier_block",
    "tight_frame_defect",
    "universal_upper",
    "half_shift_lower",
    "smin_bounds_block",
    "row_factor_min",
    "optimal_row_factor",
    "optimal_shift",
    "shift_sweep",
    "near_tightness_report",
    "rigidity_check_square",
    "design_search_e_optimal",
    "evaluation_matrix",
    "kernel_gram",
    "kernel_gram_eigenvalues",
    "carleson_line_density",
    "make_rng",
]


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator so streams do not depend on the platform."""
    return np.random.Generator(np.random.Philox(int(seed)))


def _check_positive(**kw):
    for k, v in kw.items():
        if not (np.isfinite(v) and v > 0):
            raise InvalidInput(f"{k} must be positive, got {v}")


def equispaced_design(alpha: float, M: int, ell: float, eta: float) -> SeamDesign:
    """Nodes ``x_k = 2 pi (k-1)/(M l) + 2 alpha / l``, ``k = 1..M``."""
    M = int(M)
    if M < 1:
        raise InvalidInput("M must be at least 1")
    _check_positive(ell=ell, eta=eta)
    k = np.arange(M)
    return SeamDesign(eta, 2 * np.pi * k / (M * ell) + 2 * alpha / ell)


def half_shift_design(M: int, ell: float, eta: float) -> SeamDesign:
    """The equispaced design with shift ``pi/(2M)``: ``x_k = 2 pi (k - 1/2)/(M l)``."""
    return equispaced_design(np.pi / (2 * int(M)), M, ell, eta)


def _wrapped_phases(design: SeamDesign, ell: float) -> np.ndarray:
    return np.mod(design.nodes * ell, 2 * np.pi)


def _circ_dist(a, b):
    d = np.mod(a - b + np.pi, 2 * np.pi) - np.pi
    return np.abs(d)


def is_half_shift(design: SeamDesign, ell: float) -> bool:
    """True when the nodes are a permutation of the half-shift design modulo ``2 pi / l``."""
    M = design.M
    theta = np.sort(_wrapped_phases(design, ell))
    target = 2 * np.pi * (np.arange(M) + 0.5) / M
    scale = max(1.0, float(np.max(np.abs(design.nodes * ell))) / (2 * np.pi))
    return bool(np.all(_circ_dist(theta, target) <= TOL.half_shift_match * scale))


def fourier_block(design: SeamDesign, N: int, ell: float) -> np.ndarray:
    j = np.arange(int(N))
    return np.exp(1j * np.outer(design.nodes, j * ell))


def tight_frame_defect(design: SeamDesign, N: int, ell: float) -> float:
    """``||F^H F - M I||_F``."""
    F = fourier_block(design, N, ell)
    G = F.conj().T @ F
    return float(np.linalg.norm(G - design.M * np.eye(int(N))))


def universal_upper(M: int, N: int, Lambda: float, eta: float) -> float:
    """Design-independent ceiling ``2 sqrt(M) cosh(eta l/2) e^{-eta (Lambda - l/2)}``."""
    ell = Lambda / N
    return float(2 * np.sqrt(M) * np.cosh(eta * ell / 2) * np.exp(-eta * (Lambda - ell / 2)))


def optimal_row_factor(M: int, ell: float, eta: float) -> float:
    """``2 sqrt(sinh^2(eta l/2) + sin^2(pi/(2M)))``."""
    return float(2 * np.sqrt(np.sinh(eta * ell / 2) ** 2 + np.sin(np.pi / (2 * M)) ** 2))


def half_shift_lower(M: int, N: int, Lambda: float, eta: float) -> float:
    ell = Lambda / N
    return float(np.sqrt(M) * optimal_row_factor(M, ell, eta) * np.exp(-eta * (Lambda - ell / 2)))


@dataclass(frozen=True)
class SandwichReport:
    smin: float
    lower: float
    upper: float
    design: SeamDesign
    tight_frame_defect: float
    lower_kind: str  # "half-shift" or "product"

    def as_row(self, N: int, Lambda: float) -> dict:
        return {
            "M": self.design.M,
            "N": int(N),
            "eta": self.design.eta,
            "Lambda": float(Lambda),
            "smin": self.smin,
            "lower": self.lower,
            "upper": self.upper,
            "defect": self.tight_frame_defect,
        }


def smin_bounds_block(design: SeamDesign, N: int, Lambda: float) -> SandwichReport:
    """Smallest singular value of the block Jacobian with its closed-form brackets.

    The lower bound is the half-shift formula when the design belongs to that
    family; otherwise it is the product ``smin(D_gamma) smin(F) smin(D_w)``.
    """
    N = int(N)
    M = design.M
    if not (M >= N >= 1):
        raise InvalidInput(f"need M >= N >= 1, got M={M}, N={N}")
    _check_positive(Lambda=Lambda)
    ell = Lambda / N
    T, fac = jacobian_block_free(design, N, Lambda)
    s = smin(T)
    upper = universal_upper(M, N, Lambda, design.eta)
    if is_half_shift(design, ell):
        lower, kind = half_shift_lower(M, N, Lambda, design.eta), "half-shift"
    else:
        lower = float(np.min(np.abs(fac.gamma)) * smin(fac.F) * np.min(fac.w))
        kind = "product"
    return SandwichReport(s, lower, upper, design, tight_frame_defect(design, N, ell), kind)


def _row_factor_moduli(x: np.ndarray, ell: float, eta: float) -> np.ndarray:
    # |sin(a + ib)|^2 = sin^2 a + sinh^2 b
    a = x * ell / 2
    return 2 * np.sqrt(np.sin(a) ** 2 + np.sinh(eta * ell / 2) ** 2)


def row_factor_min(design: SeamDesign, ell: float) -> float:
    """``min_k |gamma_k|``."""
    _check_positive(ell=ell)
    return float(np.min(_row_factor_moduli(design.nodes, ell, design.eta)))


def shift_sweep(M: int, ell: float, eta: float, n: int = 10_000):
    """Minimum row factor of the equispaced design on ``n`` shifts in ``[0, pi/M)``."""
    M = int(M)
    alpha = np.arange(n) * (np.pi / M) / n
    k = np.arange(M)
    x = 2 * np.pi * k[None, :] / (M * ell) + 2 * alpha[:, None] / ell
    vals = np.min(_row_factor_moduli(x, ell, eta), axis=1)
    return alpha, vals


def optimal_shift(M: int, ell: float, eta: float):
    """Best shift of the equispaced family and its minimum row factor."""
    M = int(M)
    if M < 2:
        raise InvalidInput("optimal_shift needs M >= 2")
    _check_positive(ell=ell, eta=eta)
    return float(np.pi / (2 * M)), optimal_row_factor(M, ell, eta)


class NearTightnessReport(NamedTuple):
    muhat: np.ndarray
    gram_gap: float
    smin_lower: Optional[float]
    chain_holds: bool


def near_tightness_report(design: SeamDesign, N: int, ell: float) -> NearTightnessReport:
    """Phase moments ``mu(r)``, ``r = 1..N-1``, against the Gram deviation they control."""
    N = int(N)
    M = design.M
    if M < N:
        raise InvalidInput(f"need M >= N, got M={M}, N={N}")
    theta = _wrapped_phases(design, ell)
    r = np.arange(1, N)
    muhat = np.exp(1j * np.outer(r, theta)).mean(axis=1)
    F = fourier_block(design, N, ell)
    A = F.conj().T @ F / M
    gap = float(singular_values(A - np.eye(N))[0]) if N > 1 else 0.0
    total = float(np.sum(np.abs(muhat)))
    sup = float(np.max(np.abs(muhat))) if N > 1 else 0.0
    slack = 1e-12
    holds = sup <= gap + slack and gap <= 2 * total + slack
    eps = 2 * total
    lower = float(np.sqrt(M) * np.sqrt(1 - eps)) if eps < 1 else None
    return NearTightnessReport(muhat, gap, lower, holds)


class RigidityReport(NamedTuple):
    is_tight: bool
    phase_fit: float
    power_sum_max: float
    smin: float


def rigidity_check_square(design: SeamDesign, N: int, ell: float) -> RigidityReport:
    """Square-case tightness test: tight iff phases are rotated ``N``-th roots of unity."""
    N = int(N)
    if design.M != N:
        raise InvalidInput(f"square case needs M == N, got M={design.M}, N={N}")
    s = smin(fourier_block(design, N, ell))
    tight = s >= np.sqrt(N) - TOL.tight_sigma
    theta = np.sort(_wrapped_phases(design, ell))
    grid = 2 * np.pi * np.arange(N) / N
    beta = float(np.angle(np.mean(np.exp(1j * (theta - grid)))))
    fit = float(np.max(_circ_dist(theta, beta + grid)))
    r = np.arange(1, N)
    power = np.abs(np.exp(1j * np.outer(r, theta)).sum(axis=1))
    pmax = float(np.max(power)) if N > 1 else 0.0
    return RigidityReport(bool(tight), fit, pmax, float(s))


def _golden_max(f, a: float, b: float, iters: int):
    g = (np.sqrt(5) - 1) / 2
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def design_search_e_optimal(
    M: int,
    N: int,
    ell: float,
    eta: float,
    seed: int,
    n_random_starts: int = 3,
    sweeps: int = 3,
    golden_iters: int = 25,
):
    """Local E-optimal search: maximise ``smin(T)`` over the nodes.

    Coordinate ascent with a golden-section line search on a window of one
    grid spacing around each node, started from the half-shift design and from
    ``n_random_starts`` seeded random designs.  Returns the best design found
    and its smallest singular value.  This is a heuristic; it never claims
    global optimality.
    """
    M, N = int(M), int(N)
    if not (M >= N >= 1):
        raise InvalidInput(f"need M >= N >= 1, got M={M}, N={N}")
    _check_positive(ell=ell, eta=eta)
    Lambda = N * ell
    period = 2 * np.pi / ell

    def score(x):
        # Gram eigenvalues are plenty for ranking candidates; the reported
        # value below is recomputed with the Jacobi SVD
        T, _ = jacobian_block_free(SeamDesign(eta, x), N, Lambda)
        return float(np.sqrt(max(hermitian_eigenvalues(T.conj().T @ T)[0], 0.0)))

    rng = make_rng(seed)
    starts = [half_shift_design(M, ell, eta).nodes.copy()]
    starts += [rng.uniform(0.0, period, size=M) for _ in range(n_random_starts)]
    half = np.pi / (M * ell)
    best_x, best_s = None, -np.inf
    for x in starts:
        x = x.copy()
        cur = score(x)
        for _ in range(sweeps):
            for k in range(M):
                def along(t, k=k):
                    y = x.copy()
                    y[k] = t
                    return score(y)

                t, val = _golden_max(along, x[k] - half, x[k] + half, golden_iters)
                if val > cur:
                    x[k], cur = t, val
        if cur > best_s:
            best_x, best_s = x, cur
    best = SeamDesign(eta, np.mod(best_x, period))
    return best, smin(jacobian_block_free(best, N, Lambda)[0])


def evaluation_matrix(points, N: int, ell: float) -> np.ndarray:
    """``Ev_{kj} = e^{i w_k j l}``."""
    w = np.asarray(points, dtype=complex).reshape(-1)
    j = np.arange(int(N))
    return np.exp(1j * np.outer(w, j * ell))


def kernel_gram(points, N: int, ell: float) -> np.ndarray:
    """Gram matrix ``A_{jk} = K_N(w_j, w_k)`` of the reproducing kernel of the model space."""
    w = np.asarray(points, dtype=complex).reshape(-1)
    if w.size == 0:
        raise InvalidInput("need at least one point")
    if not np.all(np.isfinite(w)):
        raise InvalidInput("points must be finite")
    j = np.arange(int(N)) * ell
    # K_N(z, w) = sum_j e^{i z j l} e^{-i conj(w) j l}
    return np.exp(1j * np.outer(w, j)) @ np.exp(-1j * np.outer(w.conj(), j)).T


def kernel_gram_eigenvalues(points, N: int, ell: float) -> np.ndarray:
    return hermitian_eigenvalues(kernel_gram(points, N, ell))


def carleson_line_density(X, eta: float) -> float:
    """``sup_{|I| >= eta} #(X cap I)/|I|`` for a finite set of reals."""
    _check_positive(eta=eta)
    x = np.sort(np.asarray(X, dtype=float).reshape(-1))
    if x.size == 0:
        return 0.0
    if not np.all(np.isfinite(x)):
        raise InvalidInput("points must be finite")
    i, j = np.triu_indices(x.size)
    counts = j - i + 1
    spans = np.maximum(eta, x[j] - x[i])
    return float(np.max(counts / spans))
