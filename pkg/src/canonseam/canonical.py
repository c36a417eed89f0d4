"""Trace-normed 2x2 canonical systems with piecewise-constant Hamiltonians.

Conventions: ``J = [[0, -1], [1, 0]]``, ``X(q) = [[Re q, Im q], [Im q, -Re q]]``
and ``H = I/2 + X(q)`` on each cell.  The transfer matrix solves
``d/ds Phi(s, t; z) = -z J H(s) Phi(s, t; z)`` with ``Phi(t, t) = I``, so on a
cell of length ``ds`` it is exactly ``exp(-z ds J H_cell)``.

The Weyl coefficient is read off the endpoint entries ``A, B, C, D`` of
``Phi(Lambda, 0; z)``::

    m(z) = (i A - C) / (D - i B)

which is the unique ``m`` for which ``Phi(Lambda, 0) (1, m)`` is parallel to
``u+ = (1, i)``, the decaying mode of the free tail.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DenominatorCollapse, InvalidInput, InvalidPerturbation, OutOfDomain
from .linalg import J, expm_traceless2
from .tolerances import TOL

__all__ = [
    "X",
    "U_PLUS",
    "U_MINUS",
    "BlockHamiltonian",
    "GridHamiltonian",
    "TransferMatrix",
    "PoleFlag",
    "propagator",
    "transfer",
    "prefix_products",
    "suffix_products",
    "weyl_parts",
    "weyl_m",
    "schur_v",
    "m_from_v",
    "continue_meromorphic",
    "append_free_tail_blocks",
    "j_form_min_eig",
    "hamiltonian_from_dict",
    "hamiltonian_from_json",
]

U_PLUS = np.array([1.0, 1.0j])
U_MINUS = np.array([1.0, -1.0j])


def X(q):
    """Real symmetric traceless matrix ``[[a, b], [b, -a]]`` for ``q = a + ib``.

    Broadcasts over the shape of ``q``; the result has shape ``q.shape + (2, 2)``.
    """
    q = np.asarray(q, dtype=complex)
    out = np.empty(q.shape + (2, 2), dtype=float)
    out[..., 0, 0] = q.real
    out[..., 0, 1] = q.imag
    out[..., 1, 0] = q.imag
    out[..., 1, 1] = -q.real
    return out


@dataclass(frozen=True)
class BlockHamiltonian:
    """``N`` equal blocks on ``[0, Lambda]`` with traceless parameters ``q_j``.

    ``epsilon`` is the positivity margin: every block has eigenvalues in
    ``(epsilon, 1 - epsilon)``, i.e. ``|q_j| <= 1/2 - epsilon``.
    """

    params: np.ndarray
    Lambda: float
    epsilon: float = 0.05
    kind: str = field(default="block", init=False, repr=False)

    def __post_init__(self):
        q = np.array(self.params, dtype=complex).reshape(-1)
        q.setflags(write=False)
        object.__setattr__(self, "params", q)
        object.__setattr__(self, "Lambda", float(self.Lambda))
        object.__setattr__(self, "epsilon", float(self.epsilon))
        if q.size == 0:
            raise InvalidInput("a Hamiltonian needs at least one cell")
        if not np.all(np.isfinite(q)):
            raise InvalidInput("Hamiltonian parameters must be finite")
        if not (np.isfinite(self.Lambda) and self.Lambda > 0):
            raise InvalidInput(f"Lambda must be positive, got {self.Lambda}")
        if not (0.0 < self.epsilon < 0.5):
            raise InvalidInput(f"epsilon must lie in (0, 1/2), got {self.epsilon}")
        worst = float(np.max(np.abs(q)))
        if worst > 0.5 - self.epsilon + 1e-15:
            raise InvalidPerturbation(
                f"max |q| = {worst:.6g} exceeds the margin 1/2 - epsilon = {0.5 - self.epsilon:.6g}"
            )

    @classmethod
    def free(cls, N: int, Lambda: float, epsilon: float = 0.05):
        return cls(np.zeros(int(N), dtype=complex), Lambda, epsilon)

    @property
    def N(self) -> int:
        return self.params.size

    @property
    def ell(self) -> float:
        return self.Lambda / self.N

    @property
    def breakpoints(self) -> np.ndarray:
        return np.linspace(0.0, self.Lambda, self.N + 1)

    @property
    def is_free(self) -> bool:
        return not np.any(self.params)

    def matrices(self) -> np.ndarray:
        """Per-cell Hamiltonians ``I/2 + X(q_j)``, shape ``(N, 2, 2)``."""
        return 0.5 * np.eye(2) + X(self.params)

    def with_params(self, q):
        """Same partition with new parameters; the margin shrinks if needed."""
        q = np.asarray(q, dtype=complex).reshape(-1)
        if q.shape != self.params.shape:
            raise InvalidInput(f"expected {self.N} parameters, got {q.size}")
        if not np.all(np.isfinite(q)):
            raise InvalidInput("Hamiltonian parameters must be finite")
        room = 0.5 - float(np.max(np.abs(q)))
        if room <= 0.0:
            raise InvalidPerturbation(f"perturbed parameters reach |q| = {0.5 - room:.6g} >= 1/2")
        return type(self)(q, self.Lambda, min(self.epsilon, room))

    def perturbed(self, theta):
        """Additive chart ``q_j -> q_j + theta_j``."""
        return self.with_params(self.params + np.asarray(theta, dtype=complex))

    def cell_of(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return np.clip(np.floor(s / self.ell).astype(int), 0, self.N - 1)

    def to_dict(self) -> dict:
        return {
            "type": self.kind,
            "Lambda": self.Lambda,
            "params": [[float(c.real), float(c.imag)] for c in self.params],
            "epsilon": self.epsilon,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def __eq__(self, other):
        return (
            type(self) is type(other)
            and self.Lambda == other.Lambda
            and self.epsilon == other.epsilon
            and np.array_equal(self.params, other.params)
        )

    def __hash__(self):
        return hash((self.kind, self.Lambda, self.epsilon, self.params.tobytes()))


@dataclass(frozen=True, eq=False)
class GridHamiltonian(BlockHamiltonian):
    """Fine piecewise-constant profile ``H(s) = I/2 + X(p(s))``.

    Numerically identical to a block Hamiltonian; the separate type marks a
    Hamiltonian meant as a generic (non-tangent-model) profile.
    """

    kind: str = field(default="grid", init=False, repr=False)

    @property
    def p(self) -> np.ndarray:
        return self.params

    @property
    def cell_count(self) -> int:
        return self.N


def hamiltonian_from_dict(d: dict) -> BlockHamiltonian:
    try:
        kind = d.get("type", "block")
        params = np.array([complex(re, im) for re, im in d["params"]])
        Lambda = float(d["Lambda"])
        epsilon = float(d.get("epsilon", 0.05))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"malformed Hamiltonian document: {exc}") from exc
    if kind == "block":
        return BlockHamiltonian(params, Lambda, epsilon)
    if kind == "grid":
        return GridHamiltonian(params, Lambda, epsilon)
    raise InvalidInput(f"unknown Hamiltonian type {kind!r}")


def hamiltonian_from_json(text: str) -> BlockHamiltonian:
    return hamiltonian_from_dict(json.loads(text))


def _cell_factors(Hm: np.ndarray, lengths: np.ndarray, z: np.ndarray) -> np.ndarray:
    """``exp(-z * length * J H)`` for each cell and each z: shape ``z.shape + (ncell, 2, 2)``."""
    JH = J.real @ Hm  # (ncell, 2, 2), traceless
    gen = -(z[..., None, None, None] * lengths[:, None, None]) * JH
    return expm_traceless2(gen, check=False)


def _as_z(z) -> np.ndarray:
    za = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(za)):
        raise InvalidInput("z must be finite")
    return za


def propagator(H: BlockHamiltonian, t: float, s: float, z) -> np.ndarray:
    """Raw transfer matrix ``Phi(s, t; z)``; broadcasts over ``z``."""
    t, s = float(t), float(s)
    slack = 1e-12 * H.Lambda
    if not (-slack <= t <= s + slack and s <= H.Lambda + slack):
        raise OutOfDomain(f"need 0 <= t <= s <= Lambda={H.Lambda}, got t={t}, s={s}")
    t, s = max(t, 0.0), min(s, H.Lambda)
    t = min(t, s)
    za = _as_z(z)
    b = H.breakpoints
    lo = np.maximum(b[:-1], t)
    hi = np.minimum(b[1:], s)
    live = hi > lo
    out = np.broadcast_to(np.eye(2, dtype=complex), za.shape + (2, 2)).copy()
    if not np.any(live):
        return out
    F = _cell_factors(H.matrices()[live], (hi - lo)[live], za)
    for c in range(F.shape[-3]):
        out = F[..., c, :, :] @ out
    return out


@dataclass(frozen=True)
class TransferMatrix:
    value: np.ndarray
    t: float
    s: float
    z: complex

    def det_defect(self) -> float:
        return float(abs(np.linalg.det(self.value) - 1.0))

    def symplectic_defect(self) -> float:
        return float(np.linalg.norm(self.value.T @ J @ self.value - J, 2))

    def norm_bound_excess(self) -> float:
        """``||Phi||_op - exp(|z| (s - t))``; nonpositive up to roundoff."""
        return float(np.linalg.norm(self.value, 2) - np.exp(abs(self.z) * (self.s - self.t)))

    def check(self) -> None:
        if self.det_defect() > TOL.det_one:
            raise AssertionError(f"det defect {self.det_defect():.3e}")
        if self.symplectic_defect() > TOL.symplectic:
            raise AssertionError(f"symplectic defect {self.symplectic_defect():.3e}")
        if self.norm_bound_excess() > TOL.propagator_slack:
            raise AssertionError(f"propagator bound exceeded by {self.norm_bound_excess():.3e}")


def transfer(H: BlockHamiltonian, t: float, s: float, z: complex) -> TransferMatrix:
    """Transfer matrix ``Phi(s, t; z)`` for a single energy ``z``."""
    z = complex(z)
    return TransferMatrix(propagator(H, t, s, z), float(t), float(s), z)


def prefix_products(H: BlockHamiltonian, z) -> np.ndarray:
    """``Phi(b_c, 0; z)`` at every breakpoint ``b_c``: shape ``z.shape + (N+1, 2, 2)``."""
    za = _as_z(z)
    F = _cell_factors(H.matrices(), np.full(H.N, H.ell), za)
    out = np.empty(za.shape + (H.N + 1, 2, 2), dtype=complex)
    cur = np.broadcast_to(np.eye(2, dtype=complex), za.shape + (2, 2)).copy()
    out[..., 0, :, :] = cur
    for c in range(H.N):
        cur = F[..., c, :, :] @ cur
        out[..., c + 1, :, :] = cur
    return out


def suffix_products(H: BlockHamiltonian, z) -> np.ndarray:
    """``Phi(Lambda, b_c; z)`` at every breakpoint ``b_c``: shape ``z.shape + (N+1, 2, 2)``."""
    za = _as_z(z)
    F = _cell_factors(H.matrices(), np.full(H.N, H.ell), za)
    out = np.empty(za.shape + (H.N + 1, 2, 2), dtype=complex)
    cur = np.broadcast_to(np.eye(2, dtype=complex), za.shape + (2, 2)).copy()
    out[..., H.N, :, :] = cur
    for c in range(H.N - 1, -1, -1):
        cur = cur @ F[..., c, :, :]
        out[..., c, :, :] = cur
    return out


def weyl_parts(H: BlockHamiltonian, z):
    """Numerator ``iA - C`` and denominator ``D - iB`` of the Weyl formula."""
    P = propagator(H, 0.0, H.Lambda, z)
    A, B, C, D = P[..., 0, 0], P[..., 0, 1], P[..., 1, 0], P[..., 1, 1]
    return 1j * A - C, D - 1j * B


def _require_upper(z) -> np.ndarray:
    za = _as_z(z)
    if np.any(za.imag <= 0):
        raise OutOfDomain("the Weyl coefficient needs Im z > 0")
    return za


def weyl_m(H: BlockHamiltonian, z):
    """Weyl coefficient ``m(z)`` for ``Im z > 0``; broadcasts over ``z``."""
    za = _require_upper(z)
    num, den = weyl_parts(H, za)
    floor = TOL.weyl_denominator_rel * np.exp(za.imag * H.Lambda / 2)
    if np.any(np.abs(den) < floor):
        raise DenominatorCollapse("D - iB is numerically zero")
    m = num / den
    return complex(m) if np.ndim(m) == 0 else m


def schur_v(H: BlockHamiltonian, z):
    """Schur function ``v = (m - i)/(m + i)``; lies in the open unit disk."""
    m = weyl_m(H, z)
    v = (m - 1j) / (m + 1j)
    return complex(v) if np.ndim(v) == 0 else v


def m_from_v(v):
    """Inverse Cayley map ``m = i (1 + v)/(1 - v)``."""
    v = np.asarray(v, dtype=complex)
    m = 1j * (1 + v) / (1 - v)
    return complex(m) if m.ndim == 0 else m


@dataclass(frozen=True)
class PoleFlag:
    """Returned by :func:`continue_meromorphic` where ``D - iB`` vanishes numerically."""

    z: complex
    denominator: float
    numerator: float

    def __bool__(self):
        return False


def continue_meromorphic(H: BlockHamiltonian, z: complex):
    """Evaluate the Weyl formula at any ``z``; entire entries, so valid in all of C."""
    z = complex(_as_z(z))
    num, den = weyl_parts(H, z)
    num, den = complex(num), complex(den)
    if abs(den) < TOL.pole_rel * max(abs(num), 1.0):
        return PoleFlag(z, abs(den), abs(num))
    return num / den


def append_free_tail_blocks(H: BlockHamiltonian, extra_blocks: int) -> BlockHamiltonian:
    """Extend ``H`` by ``extra_blocks`` free cells of the same length."""
    extra = int(extra_blocks)
    if extra < 0:
        raise InvalidInput("extra_blocks must be nonnegative")
    if extra == 0:
        return H
    q = np.concatenate([H.params, np.zeros(extra, dtype=complex)])
    return type(H)(q, H.Lambda + extra * H.ell, H.epsilon)


def j_form_min_eig(P: np.ndarray) -> float:
    """Smallest eigenvalue of ``-i (P^H J P - J)``; nonnegative for J-contractive ``P``."""
    P = np.asarray(P, dtype=complex)
    W = -1j * (P.conj().T @ J @ P - J)
    return float(np.linalg.eigvalsh(0.5 * (W + W.conj().T))[0])
