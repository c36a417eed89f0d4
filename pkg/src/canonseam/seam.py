"""The seam map ``S(theta) = (v(x_k + i eta))_k`` and its Jacobians.

At the free Hamiltonian the Jacobian of the block model factors as
``T = D_gamma F D_w`` with

* ``gamma_k = -2i sin(z_k l/2) e^{i x_k l/2}`` (row factors),
* ``F_kj = e^{i x_k j l}`` (unimodular Fourier block),
* ``w_j = e^{-eta (j + 1/2) l}`` (depth weights).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .canonical import BlockHamiltonian, schur_v
from .errors import InvalidInput

__all__ = [
    "SeamDesign",
    "FeatureBasis",
    "JacobianFactors",
    "seam_map",
    "jacobian_block_free",
    "feature_hat",
    "jacobian_general_free",
    "jacobian_fd",
    "realify",
    "complex_linearity_defect",
]


@dataclass(frozen=True)
class SeamDesign:
    """Sampling height ``eta`` and real nodes; samples at ``z_k = x_k + i eta``."""

    eta: float
    nodes: np.ndarray

    def __post_init__(self):
        x = np.array(self.nodes, dtype=float).reshape(-1)
        object.__setattr__(self, "eta", float(self.eta))
        if not (np.isfinite(self.eta) and self.eta > 0):
            raise InvalidInput(f"eta must be positive, got {self.eta}")
        if x.size == 0:
            raise InvalidInput("a design needs at least one node")
        if not np.all(np.isfinite(x)):
            raise InvalidInput("nodes must be finite")
        x.setflags(write=False)
        object.__setattr__(self, "nodes", x)

    @property
    def M(self) -> int:
        return self.nodes.size

    @property
    def z(self) -> np.ndarray:
        return self.nodes + 1j * self.eta

    def to_dict(self) -> dict:
        return {"eta": self.eta, "nodes": [float(x) for x in self.nodes]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "SeamDesign":
        try:
            return cls(float(d["eta"]), [float(x) for x in d["nodes"]])
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"malformed design document: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "SeamDesign":
        return cls.from_dict(json.loads(text))

    def __eq__(self, other):
        return (
            isinstance(other, SeamDesign)
            and self.eta == other.eta
            and np.array_equal(self.nodes, other.nodes)
        )

    def __hash__(self):
        return hash((self.eta, self.nodes.tobytes()))


@dataclass(frozen=True)
class FeatureBasis:
    """Piecewise-linear features on a common partition of ``[0, Lambda]``.

    ``left[j, c]`` and ``right[j, c]`` are the values of feature ``j`` at the
    two ends of cell ``c``; per-cell constants have ``left == right``.
    """

    edges: np.ndarray
    left: np.ndarray
    right: np.ndarray
    smooth: bool = False

    def __post_init__(self):
        e = np.array(self.edges, dtype=float).reshape(-1)
        lv = np.atleast_2d(np.array(self.left, dtype=complex))
        rv = np.atleast_2d(np.array(self.right, dtype=complex))
        if e.size < 2 or np.any(np.diff(e) <= 0) or e[0] != 0.0:
            raise InvalidInput("edges must start at 0 and increase strictly")
        if lv.shape != rv.shape or lv.shape[1] != e.size - 1:
            raise InvalidInput("left/right values must have shape (features, cells)")
        if not (np.all(np.isfinite(lv)) and np.all(np.isfinite(rv))):
            raise InvalidInput("feature values must be finite")
        if self.smooth and not np.allclose(lv[:, 1:], rv[:, :-1], rtol=0, atol=1e-14):
            raise InvalidInput("smooth features must be continuous across cells")
        for arr in (e, lv, rv):
            arr.setflags(write=False)
        object.__setattr__(self, "edges", e)
        object.__setattr__(self, "left", lv)
        object.__setattr__(self, "right", rv)

    @property
    def N(self) -> int:
        return self.left.shape[0]

    @property
    def Lambda(self) -> float:
        return float(self.edges[-1])

    @classmethod
    def indicators(cls, N: int, Lambda: float) -> "FeatureBasis":
        """Indicator of each of ``N`` equal blocks (the block model)."""
        eye = np.eye(int(N), dtype=complex)
        return cls(np.linspace(0.0, Lambda, int(N) + 1), eye, eye, smooth=False)

    @classmethod
    def hats(cls, N: int, Lambda: float) -> "FeatureBasis":
        """Continuous hat functions centred on the ``N + 1`` grid points."""
        N = int(N)
        left = np.zeros((N + 1, N), dtype=complex)
        right = np.zeros((N + 1, N), dtype=complex)
        for c in range(N):
            left[c, c] = 1.0
            right[c + 1, c] = 1.0
        return cls(np.linspace(0.0, Lambda, N + 1), left, right, smooth=True)

    def values_at(self, s) -> np.ndarray:
        """Feature values at points ``s``, shape ``(N, len(s))``."""
        s = np.asarray(s, dtype=float).reshape(-1)
        c = np.clip(np.searchsorted(self.edges, s, side="right") - 1, 0, self.edges.size - 2)
        frac = (s - self.edges[c]) / np.diff(self.edges)[c]
        return self.left[:, c] + frac * (self.right[:, c] - self.left[:, c])

    def derivative_l1(self) -> np.ndarray:
        """``||phi_j'||_1`` over the cell interiors."""
        return np.sum(np.abs(self.right - self.left), axis=1).real


def _phi1(w):
    """``(e^w - 1)/w``."""
    w = np.asarray(w, dtype=complex)
    small = np.abs(w) < 0.5
    ws = np.where(small, 1.0, w)
    closed = np.expm1(ws) / ws
    series = np.zeros_like(w)
    term = np.ones_like(w)  # w^k/k!
    for k in range(0, 25):
        series = series + term / (k + 1)
        term = term * w / (k + 1)
    return np.where(small, series, closed)


def _phi_lin(w):
    """``int_0^1 t e^{wt} dt = (w e^w - (e^w - 1))/w^2``."""
    w = np.asarray(w, dtype=complex)
    small = np.abs(w) < 0.5
    ws = np.where(small, 1.0, w)
    closed = (ws * np.exp(ws) - np.expm1(ws)) / ws**2
    series = np.zeros_like(w)
    term = np.ones_like(w)  # w^k/k!
    for k in range(0, 25):
        series = series + term / (k + 2)
        term = term * w / (k + 1)
    return np.where(small, series, closed)


def feature_hat(basis: FeatureBasis, z) -> np.ndarray:
    """Fourier-Laplace transforms ``int_0^Lambda phi_j(s) e^{izs} ds``.

    Exact per cell.  Returns shape ``z.shape + (N,)``.
    """
    za = np.asarray(z, dtype=complex)
    a = basis.edges[:-1]
    L = np.diff(basis.edges)
    w = 1j * za[..., None] * L  # (..., cells)
    base = np.exp(1j * za[..., None] * a) * L
    const_part = base * _phi1(w)
    lin_part = base * _phi_lin(w)
    out = const_part @ basis.left.T + lin_part @ (basis.right - basis.left).T
    return out


@dataclass(frozen=True)
class JacobianFactors:
    gamma: np.ndarray
    F: np.ndarray
    w: np.ndarray

    def assemble(self) -> np.ndarray:
        return self.gamma[:, None] * self.F * self.w[None, :]


def jacobian_block_free(design: SeamDesign, N: int, Lambda: float):
    """Exact block Jacobian at the free Hamiltonian and its three factors."""
    N = int(N)
    if N < 1:
        raise InvalidInput("N must be at least 1")
    if not Lambda > 0:
        raise InvalidInput("Lambda must be positive")
    ell = Lambda / N
    x, eta = design.nodes, design.eta
    gamma = -2j * np.sin(design.z * ell / 2) * np.exp(1j * x * ell / 2)
    j = np.arange(N)
    F = np.exp(1j * np.outer(x, j * ell))
    w = np.exp(-eta * (j + 0.5) * ell)
    factors = JacobianFactors(gamma, F, w)
    return factors.assemble(), factors


def jacobian_general_free(basis: FeatureBasis, design: SeamDesign) -> np.ndarray:
    """``T = diag(-i z_k) [phi_j^(z_k)]`` for the general tangent model."""
    z = design.z
    return (-1j * z)[:, None] * feature_hat(basis, z)


def seam_map(H_base: BlockHamiltonian, theta, design: SeamDesign) -> np.ndarray:
    """Schur values of ``H(theta)`` (additive chart) at every design node."""
    H = H_base.perturbed(theta) if theta is not None else H_base
    return np.atleast_1d(schur_v(H, design.z))


def realify(T) -> np.ndarray:
    """Real ``2M x 2N`` form acting on ``(Re theta, Im theta)`` and returning ``(Re, Im)``."""
    T = np.asarray(T, dtype=complex)
    return np.block([[T.real, -T.imag], [T.imag, T.real]])


def jacobian_fd(H_base: BlockHamiltonian, theta0, design: SeamDesign, step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian in the real coordinates ``(h_1..h_N, k_1..k_N)``."""
    theta0 = np.asarray(theta0, dtype=float).reshape(-1)
    N = H_base.N
    if theta0.size != 2 * N:
        raise InvalidInput(f"theta0 must have length 2N = {2 * N}")
    if not step > 0:
        raise InvalidInput("step must be positive")
    base = theta0[:N] + 1j * theta0[N:]
    cols = []
    for idx in range(2 * N):
        e = np.zeros(N, dtype=complex)
        e[idx % N] = 1.0 if idx < N else 1.0j
        up = seam_map(H_base, base + step * e, design)
        dn = seam_map(H_base, base - step * e, design)
        d = (up - dn) / (2 * step)
        cols.append(np.concatenate([d.real, d.imag]))
    return np.column_stack(cols)


def complex_linearity_defect(J_real: np.ndarray) -> float:
    """``max |dS/dk_j - i dS/dh_j|`` from a real Jacobian laid out as :func:`jacobian_fd`."""
    J_real = np.asarray(J_real, dtype=float)
    M, N = J_real.shape[0] // 2, J_real.shape[1] // 2
    cplx = J_real[:M] + 1j * J_real[M:]
    return float(np.max(np.abs(cplx[:, N:] - 1j * cplx[:, :N])))
