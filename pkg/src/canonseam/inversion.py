"""Local inversion of the seam map around the free Hamiltonian (square case).

The fixed-point map ``G_y(theta) = theta - T^{-1}(S(theta) - y)`` is a
contraction on ``B(0, r)`` as soon as ``B M0 r <= 1/2`` where ``M0 = 1/smin(T)``
and ``B`` bounds the second derivative of ``S``.  Two budgets are offered:

``certified``
    every constant from the explicit Duhamel chain.  Rigorous, but the radius
    is typically far below machine precision.
``empirical``
    ``B`` from sampled second differences of ``S`` on the candidate ball, with
    ``r`` shrunk until ``B M0 r <= 1/2`` and never beyond the positivity
    margin.  Useful for experiments; not a proof.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .canonical import BlockHamiltonian
from .design import make_rng
from .errors import InvalidInput, NoConvergence, RankDeficientJacobian
from .linalg import smin, solve_square, svd_jacobi
from .seam import SeamDesign, jacobian_block_free, seam_map
from .tolerances import TOL

__all__ = [
    "IFTBudget",
    "Certificate",
    "ReconstructionResult",
    "TwoPointReport",
    "ift_budget",
    "empirical_second_derivative",
    "reconstruct",
    "taylor_remainder_check",
    "minimax_two_point",
    "MODES",
]

MODES = ("certified", "empirical")


@dataclass(frozen=True)
class IFTBudget:
    Z: float
    C1: float
    C2: float
    delta0: float
    r_d: float
    B: float
    alpha: float
    M0: float
    r: float
    delta: float
    epsilon_margin: float
    mode: str = "certified"

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _check_square(design: SeamDesign, N: int, Lambda: float):
    N = int(N)
    if design.M != N:
        raise InvalidInput(f"inversion is square: need M == N, got M={design.M}, N={N}")
    if not Lambda > 0:
        raise InvalidInput("Lambda must be positive")
    return N


def _free(N: int, Lambda: float, epsilon: float) -> BlockHamiltonian:
    return BlockHamiltonian.free(N, Lambda, epsilon)


def empirical_second_derivative(
    design: SeamDesign,
    N: int,
    Lambda: float,
    epsilon: float = 0.05,
    seed: int = 0,
    radius: float = 0.0,
    pairs: int = TOL.empirical_b_pairs,
    step: float = TOL.empirical_b_step,
) -> float:
    """Sampled bound on ``||D^2 S||`` over the ball ``B(0, radius)``.

    Each of ``pairs`` random unit direction pairs ``(u, w)`` is probed with the
    mixed central difference of step ``step`` at a random base point of the
    ball (the first pair at the origin).
    """
    H0 = _free(int(N), Lambda, epsilon)
    rng = make_rng(seed)
    h = step
    best = 0.0
    for i in range(pairs):
        u = rng.normal(size=N) + 1j * rng.normal(size=N)
        w = rng.normal(size=N) + 1j * rng.normal(size=N)
        c = rng.normal(size=N) + 1j * rng.normal(size=N)
        u /= np.linalg.norm(u)
        w /= np.linalg.norm(w)
        rho = 0.0 if i == 0 else max(radius - 2 * h, 0.0) * rng.uniform() ** (1.0 / (2 * N))
        c *= rho / np.linalg.norm(c)
        d2 = (
            seam_map(H0, c + h * (u + w), design)
            - seam_map(H0, c + h * (u - w), design)
            - seam_map(H0, c + h * (w - u), design)
            + seam_map(H0, c - h * (u + w), design)
        ) / (4 * h * h)
        best = max(best, float(np.linalg.norm(d2)))
    return best


def _empirical_radius(design, N, L, epsilon, seed, M0, rounds: int = 12):
    # shrink r until the B measured on B(0, r) certifies B M0 r <= 1/2
    r = 0.5 - epsilon
    B = empirical_second_derivative(design, N, L, epsilon, seed, radius=r)
    for _ in range(rounds):
        r_new = min(1.0 / (2 * max(B, np.finfo(float).tiny) * M0), 0.5 - epsilon)
        if r_new >= r:
            break
        r = r_new
        B = empirical_second_derivative(design, N, L, epsilon, seed, radius=r)
    return max(B, np.finfo(float).tiny), r


def ift_budget(
    design: SeamDesign,
    N: int,
    Lambda: float,
    epsilon: float = 0.05,
    mode: str = "certified",
    seed: int = 0,
) -> IFTBudget:
    """Constants certifying (or, in empirical mode, estimating) the local inverse chart."""
    N = _check_square(design, N, Lambda)
    if mode not in MODES:
        raise InvalidInput(f"mode must be one of {MODES}, got {mode!r}")
    if not (0 < epsilon < 0.5):
        raise InvalidInput("epsilon must lie in (0, 1/2)")
    eta = design.eta
    L = float(Lambda)
    T, _ = jacobian_block_free(design, N, L)
    alpha = smin(T)
    if alpha <= TOL.rank_floor:
        raise RankDeficientJacobian(f"smin(T) = {alpha:.3e}")
    M0 = 1.0 / alpha
    Z = float(np.max(np.abs(design.z)))
    eZL = np.exp(Z * L)
    C1 = Z * L * np.exp(2 * Z * L)
    C2 = 2 * Z**2 * L**2 * np.exp(3 * Z * L)
    delta0 = 0.5 * np.exp(eta * L / 2)
    r_d = np.exp(eta * L / 2) / (8 * C1)
    if mode == "certified":
        dm = 2 * C1 / delta0 + 4 * eZL * C1 / delta0**2
        d2m = (
            2 * C2 / delta0
            + 8 * C1**2 / delta0**2
            + 4 * eZL * C2 / delta0**2
            + 16 * eZL * C1**2 / delta0**3
        )
        B = np.sqrt(N) * (4 * dm**2 + 2 * d2m)
        r = min(r_d, 1.0 / (2 * B * M0), 0.5 - epsilon)
    else:
        B, r = _empirical_radius(design, N, L, epsilon, seed, M0)
        r = min(r, 1.0 / (2 * B * M0))
    delta = r / (2 * M0)
    return IFTBudget(
        float(Z), float(C1), float(C2), float(delta0), float(r_d), float(B),
        float(alpha), float(M0), float(r), float(delta), float(epsilon), mode,
    )


@dataclass
class Certificate:
    mode: str
    budget: IFTBudget
    data_within_delta: bool
    iterates_in_ball: bool = True
    converged: bool = False
    max_iterate_norm: float = 0.0
    notes: list = field(default_factory=list)

    @property
    def preconditions_held(self) -> bool:
        return self.data_within_delta


class ReconstructionResult(NamedTuple):
    theta_star: np.ndarray
    iterations: int
    residual: float
    certificate: Certificate


def reconstruct(
    y,
    design: SeamDesign,
    N: int,
    Lambda: float,
    mode: str = "empirical",
    max_iter: int = 50,
    tol: float = 1e-13,
    epsilon: float = 0.05,
    budget: Optional[IFTBudget] = None,
    seed: int = 0,
) -> ReconstructionResult:
    """Fixed-point reconstruction ``theta <- theta - T^{-1}(S(theta) - y)`` from ``theta = 0``."""
    N = _check_square(design, N, Lambda)
    y = np.asarray(y, dtype=complex).reshape(-1)
    if y.size != N:
        raise InvalidInput(f"data must have length {N}")
    if not np.all(np.isfinite(y)):
        raise InvalidInput("data must be finite")
    if budget is None:
        budget = ift_budget(design, N, Lambda, epsilon, mode, seed)
    elif budget.mode != mode:
        raise InvalidInput(f"budget was computed in {budget.mode!r} mode, not {mode!r}")
    H0 = _free(N, Lambda, epsilon)
    T, _ = jacobian_block_free(design, N, Lambda)
    S0 = seam_map(H0, None, design)
    within = float(np.linalg.norm(y - S0)) <= budget.delta
    cert = Certificate(mode, budget, within)
    if mode == "certified" and not within:
        cert.notes.append("data outside the certified ball; iterating without guarantee")

    theta = np.zeros(N, dtype=complex)
    iterations = 0
    for iterations in range(1, int(max_iter) + 1):
        step = solve_square(T, seam_map(H0, theta, design) - y)
        new = theta - step
        nrm = float(np.linalg.norm(new))
        cert.max_iterate_norm = max(cert.max_iterate_norm, nrm)
        if nrm > budget.r * (1 + 1e-12):
            cert.iterates_in_ball = False
        if mode == "empirical" and nrm > 3 * budget.r:
            raise NoConvergence(f"iterate norm {nrm:.3e} left 3r = {3 * budget.r:.3e}")
        done = float(np.linalg.norm(step)) <= tol
        theta = new
        if done:
            cert.converged = True
            break
    residual = float(np.linalg.norm(seam_map(H0, theta, design) - y))
    return ReconstructionResult(theta, iterations, residual, cert)


class RemainderCheck(NamedTuple):
    lhs: float
    rhs: float
    slope: float


def taylor_remainder_check(
    theta,
    design: SeamDesign,
    N: int,
    Lambda: float,
    B: Optional[float] = None,
    epsilon: float = 0.05,
) -> RemainderCheck:
    """``||S(theta) - S(0) - T theta||`` against ``(B/2)||theta||^2``.

    ``B`` defaults to the certified constant.  The slope is fitted on
    ``theta``, ``theta/2``, ``theta/4`` and should be close to 2.
    """
    N = _check_square(design, N, Lambda)
    theta = np.asarray(theta, dtype=complex).reshape(-1)
    if theta.size != N:
        raise InvalidInput(f"theta must have length {N}")
    if B is None:
        B = ift_budget(design, N, Lambda, epsilon, "certified").B
    H0 = _free(N, Lambda, epsilon)
    T, _ = jacobian_block_free(design, N, Lambda)
    S0 = seam_map(H0, None, design)

    def rem(th):
        return float(np.linalg.norm(seam_map(H0, th, design) - S0 - T @ th))

    lhs = rem(theta)
    nrm = float(np.linalg.norm(theta))
    rhs = 0.5 * B * nrm**2
    if nrm == 0.0:
        return RemainderCheck(lhs, rhs, float("nan"))
    scales = np.array([1.0, 0.5, 0.25])
    vals = np.array([rem(s * theta) for s in scales])
    if np.any(vals <= 0):
        return RemainderCheck(lhs, rhs, float("nan"))
    slope = float(np.polyfit(np.log(scales * nrm), np.log(vals), 1)[0])
    return RemainderCheck(lhs, rhs, slope)


class TwoPointReport(NamedTuple):
    theta0: np.ndarray
    theta1: np.ndarray
    t: float
    sample_gap: float
    gap_within_noise: bool
    lower_bound: float
    small_noise_regime: bool
    linear_form: Optional[float]
    exponential_form: Optional[float]


def minimax_two_point(
    design: SeamDesign,
    N: int,
    Lambda: float,
    delta: float,
    mode: str = "empirical",
    epsilon: float = 0.05,
    budget: Optional[IFTBudget] = None,
    seed: int = 0,
) -> TwoPointReport:
    """Two parameters whose data differ by at most ``delta``.

    ``theta1 = t h`` with ``h`` the least-amplified right singular vector and
    ``t = min(r_d, delta/(2 alpha), sqrt(delta/B))``; in empirical mode the
    empirical radius replaces ``r_d``.  Any estimator then errs by at
    least ``t/2`` on one of the two.
    """
    N = _check_square(design, N, Lambda)
    if not delta > 0:
        raise InvalidInput("noise level delta must be positive")
    if budget is None:
        budget = ift_budget(design, N, Lambda, epsilon, mode, seed)
    T, _ = jacobian_block_free(design, N, Lambda)
    _, s, V = svd_jacobi(T)
    alpha = float(s[-1])
    h = V[:, -1]
    cap = budget.r_d if mode == "certified" else budget.r
    t = float(min(cap, delta / (2 * alpha), np.sqrt(delta / budget.B)))
    H0 = _free(N, Lambda, epsilon)
    theta0 = np.zeros(N, dtype=complex)
    theta1 = t * h
    gap = float(np.linalg.norm(seam_map(H0, theta1, design) - seam_map(H0, theta0, design)))
    small = delta <= alpha**2 / budget.B
    ell = Lambda / N
    eta = design.eta
    linear = delta / (4 * alpha) if small else None
    expo = (
        delta * np.exp(eta * (Lambda - ell / 2)) / (8 * np.sqrt(N) * np.cosh(eta * ell / 2))
        if small
        else None
    )
    return TwoPointReport(theta0, theta1, t, gap, gap <= delta, t / 2, bool(small), linear, expo)
