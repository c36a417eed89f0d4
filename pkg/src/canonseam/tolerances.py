"""Numerical thresholds used by the library and its tests."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # linalg
    jacobi_offdiag: float = 1e-14
    jacobi_max_sweeps: int = 80
    pivot_rel: float = 1e-14
    trace_rel: float = 1e-12
    sinc_series_cutoff: float = 1e-4
    # canonical
    det_one: float = 1e-10
    symplectic: float = 1e-9
    propagator_slack: float = 1e-8
    weyl_denominator_rel: float = 1e-13
    pole_rel: float = 1e-12
    # variation / seam
    min_abs_z: float = 1e-8
    feature_hat_small_z: float = 1e-10
    kernel_denominator: float = 1e-12
    fd_step: float = 1e-6
    # design
    half_shift_match: float = 1e-12
    tight_sigma: float = 1e-8
    bound_slack: float = 1e-9
    # inversion
    rank_floor: float = 1e-14
    empirical_b_step: float = 1e-3
    empirical_b_pairs: int = 20
    # spectral
    near_pole: float = 1e-12
    negativity: float = 1e-12
    damping_slack: float = 1e-3


TOL = Tolerances()
