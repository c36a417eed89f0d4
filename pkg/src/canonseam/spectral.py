"""Poisson smoothing, the modulated-bump obstruction and the prolate plateau.

Fourier convention: unitary, ``f^(xi) = (2 pi)^{-1/2} int f(t) e^{-i t xi} dt``.
The Poisson kernel ``P_eta(x) = eta / (pi (x^2 + eta^2))`` has
``P_eta^(xi) = (2 pi)^{-1/2} e^{-eta |xi|}``, so smoothing at height ``eta``
multiplies the spectrum by ``e^{-eta |xi|}``.  A bump ``phi`` supported in
``[-1, 1]`` and modulated to frequency ``K`` is therefore damped by roughly
``e^{-eta (K - 1)}`` while keeping its ``L^2`` size.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np

from .errors import ConstructionError, InvalidInput, NearPole
from .linalg import singular_values
from .seam import SeamDesign
from .tolerances import TOL

__all__ = [
    "DensityGrid",
    "SmoothResult",
    "BumpPair",
    "PairReport",
    "poisson_kernel",
    "poisson_smooth",
    "bump",
    "bump_l1",
    "bump_transform",
    "poisson_bump_exact",
    "envelope_ratio",
    "build_bump_pair",
    "damping_bound",
    "damping_check",
    "minimax_pair_report",
    "im_m_from_v",
    "prolate_matrix",
    "prolate_singular_values",
    "plateau_count",
]

_INV_SQRT_2PI = 1.0 / np.sqrt(2 * np.pi)


@dataclass(frozen=True)
class DensityGrid:
    """Samples of a nonnegative density on the uniform grid ``-T, -T + dt, ..., T``."""

    T: float
    dt: float
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "dt", float(self.dt))
        if not (self.T > 0 and self.dt > 0):
            raise InvalidInput("T and dt must be positive")
        n = int(round(2 * self.T / self.dt)) + 1
        if v.size != n:
            raise InvalidInput(f"expected {n} samples for T={self.T}, dt={self.dt}, got {v.size}")
        if not np.all(np.isfinite(v)):
            raise InvalidInput("density samples must be finite")
        if np.any(v < -TOL.negativity):
            raise InvalidInput("density samples must be nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @staticmethod
    def make_grid(T: float = 40.0, dt: float = 0.01) -> np.ndarray:
        n = int(round(2 * T / dt)) + 1
        return np.linspace(-T, T, n)

    @property
    def t(self) -> np.ndarray:
        return self.make_grid(self.T, self.dt)

    @classmethod
    def from_function(cls, f, T: float = 40.0, dt: float = 0.01) -> "DensityGrid":
        return cls(T, dt, f(cls.make_grid(T, dt)))

    def weights(self) -> np.ndarray:
        w = np.full(self.values.size, self.dt)
        w[0] = w[-1] = 0.5 * self.dt
        return w

    def herglotz_mass(self) -> float:
        """Trapezoid value of ``int f/(1 + t^2) dt``."""
        return float(np.sum(self.weights() * self.values / (1 + self.t**2)))


def poisson_kernel(x, eta: float):
    x = np.asarray(x, dtype=float)
    return eta / (np.pi * (x * x + eta * eta))


class SmoothResult(NamedTuple):
    values: np.ndarray
    tail_bound: np.ndarray


def _trapezoid_weights(n: int, dt: float) -> np.ndarray:
    w = np.full(n, dt)
    w[0] = w[-1] = 0.5 * dt
    return w


def _smooth_samples(t, w, f, eta, x, chunk: int = 256) -> np.ndarray:
    out = np.empty(x.size)
    fw = f * w
    for i in range(0, x.size, chunk):
        xs = x[i:i + chunk]
        out[i:i + chunk] = poisson_kernel(xs[:, None] - t[None, :], eta) @ fw
    return out


def poisson_smooth(
    f: DensityGrid,
    eta: float,
    x_query,
    tail_level: float = 0.0,
    tail_sup: Optional[float] = None,
) -> SmoothResult:
    """``(P_eta * f)(x)`` by the trapezoid rule on the grid of ``f``.

    Outside ``[-T, T]`` the density is modelled as the constant ``tail_level``
    (integrated exactly).  ``tail_bound`` bounds the effect of any deviation of
    the true tail from that constant, of size at most ``tail_sup`` (default:
    the deviation at the grid ends), by
    ``tail_sup * (eta/pi) * (1/(T - x) + 1/(T + x))``.
    """
    if not eta > 0:
        raise InvalidInput("eta must be positive")
    x = np.asarray(x_query, dtype=float).reshape(-1)
    if np.any(np.abs(x) >= f.T):
        raise InvalidInput("query points must lie strictly inside the grid")
    vals = _smooth_samples(f.t, f.weights(), f.values, eta, x)
    if tail_level:
        # kernel mass beyond +-T
        outside = (np.pi - np.arctan((f.T - x) / eta) - np.arctan((f.T + x) / eta)) / np.pi
        vals = vals + tail_level * outside
    if tail_sup is None:
        tail_sup = max(abs(f.values[0] - tail_level), abs(f.values[-1] - tail_level))
    bound = tail_sup * (eta / np.pi) * (1.0 / (f.T - x) + 1.0 / (f.T + x))
    return SmoothResult(vals, bound)


def bump(xi):
    """Standard bump ``exp(-1/(1 - xi^2))`` on ``(-1, 1)``, zero outside."""
    xi = np.asarray(xi, dtype=float)
    inside = np.abs(xi) < 1
    safe = np.where(inside, xi, 0.0)
    return np.where(inside, np.exp(-1.0 / (1.0 - safe * safe)), 0.0)


_BUMP_ORDER = 800
_BX, _BW = np.polynomial.legendre.leggauss(_BUMP_ORDER)
_BPHI = bump(_BX)


def bump_l1() -> float:
    return float(_BW @ _BPHI)


def bump_transform(t) -> np.ndarray:
    """``h(t) = (2 pi)^{-1/2} int phi(xi) cos(t xi) d xi`` (the bump is even)."""
    t = np.asarray(t, dtype=float)
    flat = t.reshape(-1)
    out = np.empty(flat.size)
    wphi = _BW * _BPHI
    for i in range(0, flat.size, 2048):
        out[i:i + 2048] = np.cos(np.outer(flat[i:i + 2048], _BX)) @ wphi
    return (_INV_SQRT_2PI * out).reshape(t.shape)


def poisson_bump_exact(x, K: float, eta: float) -> np.ndarray:
    """``(P_eta * h_K)(x)`` evaluated in the frequency domain (reference values).

    ``h_K = h cos(K t)`` has spectrum ``(phi(xi - K) + phi(xi + K))/2``, and
    smoothing multiplies it by ``e^{-eta |xi|}``.
    """
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1)
    acc = np.zeros(flat.size)
    for sign in (1.0, -1.0):
        xi = _BX + sign * K
        acc += np.cos(np.outer(flat, xi)) @ (_BW * _BPHI * np.exp(-eta * np.abs(xi)))
    return (0.5 * _INV_SQRT_2PI * acc).reshape(x.shape)


def _psi(t):
    return (1.0 + np.asarray(t, dtype=float) ** 2) ** -2


@lru_cache(maxsize=8)
def envelope_ratio(t_max: float = 400.0, step: float = 0.05) -> tuple[float, float]:
    """``R = sup |h| / psi`` and its maximiser (grid scan, then golden refinement)."""
    t = np.arange(0.0, t_max + step, step)
    ratio = np.abs(bump_transform(t)) / _psi(t)
    k = int(np.argmax(ratio))
    a, b = t[max(k - 1, 0)], t[min(k + 1, t.size - 1)]

    def g(s):
        return float(abs(bump_transform(np.array([s]))[0]) / _psi(s))

    gr = (np.sqrt(5) - 1) / 2
    c, d = b - gr * (b - a), a + gr * (b - a)
    gc, gd = g(c), g(d)
    for _ in range(60):
        if gc >= gd:
            b, d, gd = d, c, gc
            c = b - gr * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + gr * (b - a)
            gd = g(d)
    best_t, best = (c, gc) if gc >= gd else (d, gd)
    if ratio[k] > best:
        best_t, best = float(t[k]), float(ratio[k])
    return float(best), float(best_t)


@dataclass(frozen=True)
class BumpPair:
    K: int
    epsilon: float
    R: float
    phi_l1: float
    h_l2: float
    hK_l2: float
    h: np.ndarray
    f_plus: DensityGrid
    f_minus: DensityGrid

    @property
    def t(self) -> np.ndarray:
        return self.f_plus.t

    def h_K(self) -> np.ndarray:
        return self.h * np.cos(self.K * self.t)


def build_bump_pair(K: int, epsilon: float, T: float = 40.0, dt: float = 0.01) -> BumpPair:
    """Two nonnegative densities ``f+- = 2 eps R psi +- eps h_K`` with a shared envelope."""
    if int(K) != K or K < 2:
        raise InvalidInput("K must be an integer >= 2")
    if not epsilon > 0:
        raise InvalidInput("epsilon must be positive")
    K = int(K)
    t = DensityGrid.make_grid(T, dt)
    h = bump_transform(t)
    hK = h * np.cos(K * t)
    R, _ = envelope_ratio()
    f0 = 2 * epsilon * R * _psi(t)
    fp, fm = f0 + epsilon * hK, f0 - epsilon * hK
    worst = min(fp.min(), fm.min())
    if worst < -TOL.negativity:
        raise ConstructionError(f"adversarial density dips to {worst:.3e}; refine the grid")
    w = _trapezoid_weights(t.size, dt)
    h_l2 = float(np.sqrt(np.sum(w * h * h)))
    hK_l2 = float(np.sqrt(np.sum(w * hK * hK)))
    return BumpPair(
        K, float(epsilon), R, bump_l1(), h_l2, hK_l2, h,
        DensityGrid(T, dt, np.maximum(fp, 0.0)), DensityGrid(T, dt, np.maximum(fm, 0.0)),
    )


def damping_bound(K: float, eta: float) -> float:
    """``(2 pi)^{-1/2} ||phi||_1 e^{-eta (K - 1)}``."""
    return float(_INV_SQRT_2PI * bump_l1() * np.exp(-eta * (K - 1)))


def damping_check(pair: BumpPair, eta: float, x_query=None, T_quad: float = 320.0, dt_quad: float = 0.02):
    """Measured ``sup_x |P_eta * h_K|`` on a query grid, with the exponential bound.

    The convolution is taken on its own wide grid: for large ``K`` the smoothed
    signal is so small that truncating ``h_K`` at the density-grid edge would
    dominate it.
    """
    if not eta > 0:
        raise InvalidInput("eta must be positive")
    if x_query is None:
        x_query = np.linspace(-10.0, 10.0, 801)
    x = np.asarray(x_query, dtype=float).reshape(-1)
    if np.any(np.abs(x) >= T_quad):
        raise InvalidInput("query points must lie inside the quadrature window")
    t = DensityGrid.make_grid(T_quad, dt_quad)
    hK = bump_transform(t) * np.cos(pair.K * t)
    vals = _smooth_samples(t, _trapezoid_weights(t.size, dt_quad), hK, eta, x)
    return float(np.max(np.abs(vals))), damping_bound(pair.K, eta)


class PairReport(NamedTuple):
    sample_gap: float
    c1_bound: float
    L2_separation: float
    hK_half_norm_ok: bool
    indistinguishable: bool
    lower_bound: Optional[float]


def minimax_pair_report(pair: BumpPair, design: SeamDesign, delta: float) -> PairReport:
    """Compare the smoothed data of the two densities at the design nodes."""
    x = design.nodes
    eta = design.eta
    gp = poisson_smooth(pair.f_plus, eta, x).values
    gm = poisson_smooth(pair.f_minus, eta, x).values
    gap = float(np.linalg.norm(gp - gm))
    c1 = 2 * np.sqrt(design.M) * _INV_SQRT_2PI * pair.phi_l1
    bound = float(c1 * pair.epsilon * np.exp(-eta * (pair.K - 1)))
    w = pair.f_plus.weights()
    diff = pair.f_plus.values - pair.f_minus.values
    sep = float(np.sqrt(np.sum(w * diff * diff)))
    same = delta >= 0.5 * gap
    return PairReport(gap, bound, sep, pair.hK_l2 >= 0.5 * pair.h_l2, bool(same), sep / 2 if same else None)


def im_m_from_v(v):
    """``Im m = (1 - |v|^2)/|1 - v|^2`` for the inverse Cayley image of ``v``."""
    va = np.asarray(v, dtype=complex)
    d = np.abs(1 - va)
    if np.any(d < TOL.near_pole):
        raise NearPole("v is within 1e-12 of 1")
    out = (1 - np.abs(va) ** 2) / d**2
    return float(out) if out.ndim == 0 else out


def prolate_matrix(Lambda: float, Omega: float, n_grid: int, eta: float = 0.0) -> np.ndarray:
    """Symmetrised Gauss-Legendre discretisation of ``f -> int_0^Lambda f(s) e^{-eta s} e^{-i xi s} ds``."""
    if not (Lambda > 0 and Omega > 0):
        raise InvalidInput("Lambda and Omega must be positive")
    if n_grid < 64:
        raise InvalidInput("n_grid must be at least 64")
    if eta < 0:
        raise InvalidInput("eta must be nonnegative")
    x, w = np.polynomial.legendre.leggauss(int(n_grid))
    s = 0.5 * Lambda * (x + 1)
    ws = 0.5 * Lambda * w
    xi = Omega * x
    wx = Omega * w
    K = np.exp(-1j * np.outer(xi, s)) * np.exp(-eta * s)[None, :]
    return np.sqrt(wx)[:, None] * K * np.sqrt(ws)[None, :]


def prolate_singular_values(Lambda: float, Omega: float, n_grid: int = 256, eta: float = 0.0) -> np.ndarray:
    return singular_values(prolate_matrix(Lambda, Omega, n_grid, eta))


def plateau_count(sigma) -> int:
    """``#{n : sigma_n >= sigma_1 / 2}``."""
    sigma = np.asarray(sigma, dtype=float)
    return int(np.sum(sigma >= 0.5 * sigma[0]))
