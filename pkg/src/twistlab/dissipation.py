"""Cavity-mediated twisting: collective dephasing, scattering noise and the phase-variance budget.

Two models live here side by side. The exact one evolves the spin density
matrix under twisting plus the S_z dephasing channel. The closed-form one is
the lowest-order budget

    sigma^2 = e^{Q^2/2S}/Q^2 + 4 e^{Q^2/2S}/(Q d) + 2 r Q (1/d + d) / (3 S eta),

used for the large-N parameter scans.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .echo import EchoResult, ZERO_GAIN, gain_db
from .spin import (
    SpinDensityMatrix,
    apply_twist,
    make_css,
    moments,
    to_density_matrix,
    wigner_small_d,
)

__all__ = [
    "CavityParams",
    "CavityMap",
    "SigmaBreakdown",
    "TrotterConvergenceError",
    "OptimizationError",
    "cavity_map",
    "dephasing_channel",
    "dephasing_per_twist",
    "cavity_variance_growth",
    "echo_with_dephasing",
    "dephased_echo_state",
    "scatter_noise",
    "cavity_sigma_total",
    "approx_optimum_sigma",
    "plateau_sigma",
    "optimize_cavity",
]

# exact density-matrix echo: dense (N+1)^2 matrices and O(N^3) rotations
MAX_DENSITY_ATOMS = 2000


class TrotterConvergenceError(RuntimeError):
    pass


class OptimizationError(RuntimeError):
    pass


@dataclass(frozen=True)
class CavityParams:
    """Hardware bundle for cavity twisting.

    ``eta`` is the single-atom cooperativity, ``d`` the normalised laser-cavity
    detuning 2 delta_c / kappa and ``r`` the spin-flip probability per
    scattered photon.
    """

    n_atoms: int
    eta: float
    d: float
    Q: float
    r: float = 0.5
    p: float | None = None
    Phi: float | None = None

    def __post_init__(self):
        if self.n_atoms < 1:
            raise ValueError("atom number must be >= 1")
        if not self.eta > 0:
            raise ValueError(f"cooperativity must be > 0, got {self.eta}")
        if self.d == 0:
            raise ValueError("detuning d must be non-zero")
        if not 0 <= self.r <= 1:
            raise ValueError(f"spin-flip probability must be in [0, 1], got {self.r}")
        if self.Q < 0:
            raise ValueError(f"twisting strength must be >= 0, got {self.Q}")

    @property
    def spin(self) -> float:
        return self.n_atoms / 2


@dataclass(frozen=True)
class CavityMap:
    """Per-atom rates from the photon drive, all per unit chi t."""

    q_per_2s: float
    gamma_per_chi: float
    gamma_sc_per_chi: float


@dataclass(frozen=True)
class SigmaBreakdown:
    sigma0_sq: float
    sigma_dephasing_sq: float
    sigma_scatter_sq: float
    sigma_total_sq: float

    @property
    def gain_db(self) -> float:
        return -10 * math.log10(self.sigma_total_sq)


def cavity_map(p: float, Phi: float, d: float, eta: float = 1.0) -> CavityMap:
    """Map photon number ``p``, single-pass phase ``Phi`` and detuning ``d`` to twisting rates.

    Q/(2S) = chi t = p Phi^2 d / (1 + d^2)^2, gamma = 2 chi / d and
    Gamma_sc = chi (1/d + d) / (2 eta).
    """
    if not Phi > 0:
        raise ValueError(f"Phi must be > 0, got {Phi}")
    if d == 0:
        raise ValueError("detuning d must be non-zero")
    return CavityMap(
        q_per_2s=p * Phi**2 * d / (1 + d**2) ** 2,
        gamma_per_chi=2 / d,
        gamma_sc_per_chi=(1 / d + d) / (2 * eta),
    )


def dephasing_per_twist(n_atoms: int, Q: float, d: float) -> float:
    """gamma t accumulated during one twisting stage: 2 chi t / d = Q / (S d)."""
    return abs(Q / ((n_atoms / 2) * d))


def dephasing_channel(rho: SpinDensityMatrix, gamma_t: float) -> SpinDensityMatrix:
    """Exact solution of the master equation with Lindblad operator sqrt(gamma) S_z."""
    if gamma_t < 0:
        raise ValueError(f"gamma_t must be >= 0, got {gamma_t}")
    m = rho.m
    damp = np.exp(-0.5 * gamma_t * (m[:, None] - m[None, :]) ** 2)
    return SpinDensityMatrix(rho.n_atoms, rho.elements * damp)


def cavity_variance_growth(Q: float, d: float) -> float:
    """Lowest-order Var(S_y)/Var_CSS after a dephased echo: 1 + 4Q/d."""
    return 1 + 4 * Q / d


def _twist_stage(rho, Q, gamma_t, sign, steps):
    # symmetric splitting: half dephasing, twist, half dephasing
    dq = Q / steps
    half = gamma_t / (2 * steps)
    for _ in range(steps):
        rho = dephasing_channel(rho, half)
        rho = apply_twist(rho, dq, sign)
        rho = dephasing_channel(rho, half)
    return rho


def _rotate(rho, phi):
    if phi == 0:
        return rho
    d = wigner_small_d(rho.n_atoms, phi)
    return SpinDensityMatrix(rho.n_atoms, d @ rho.elements @ d.T)


def dephased_echo_state(n_atoms: int, Q: float, gamma_t: float, phi: float = 0.0, steps: int = 32) -> SpinDensityMatrix:
    """Density matrix after twist, R_y(phi), untwist with dephasing ``gamma_t`` per twisting stage."""
    rho = to_density_matrix(make_css(n_atoms))
    rho = _twist_stage(rho, Q, gamma_t, +1, steps)
    return _twist_stage(_rotate(rho, phi), Q, gamma_t, -1, steps)


def _dephased_moments(twisted, Q, gamma_t, phi, steps):
    rho = _twist_stage(_rotate(twisted, phi), Q, gamma_t, -1, steps)
    return moments(rho, "Sy")


def echo_with_dephasing(
    n_atoms: int,
    Q: float,
    d: float,
    phi: float = 0.0,
    *,
    gamma_t: float | None = None,
    steps: int = 32,
    max_steps: int = 1024,
    rtol: float = 1e-6,
) -> EchoResult:
    """Density-matrix twisting echo with collective dephasing during both twisting stages.

    ``gamma_t`` defaults to the cavity value Q/(S d) per stage. The pulse
    R_y(phi) is treated as instantaneous. The number of Trotter steps is
    doubled until the moments change by less than ``rtol``.
    """
    if n_atoms > MAX_DENSITY_ATOMS:
        raise ValueError(f"density-matrix echo limited to N <= {MAX_DENSITY_ATOMS}")
    if steps < 32:
        raise ValueError("at least 32 Trotter steps are required")
    if gamma_t is None:
        gamma_t = dephasing_per_twist(n_atoms, Q, d)
    s = n_atoms / 2
    h = 1e-6 / s
    rho0 = to_density_matrix(make_css(n_atoms))

    def evaluate(n_steps):
        twisted = _twist_stage(rho0, Q, gamma_t, +1, n_steps)
        mean, var = _dephased_moments(twisted, Q, gamma_t, phi, n_steps)
        up = _dephased_moments(twisted, Q, gamma_t, phi + h, n_steps)[0]
        down = _dephased_moments(twisted, Q, gamma_t, phi - h, n_steps)[0]
        return np.array([mean, var, (up - down) / (2 * h)])

    current = evaluate(steps)
    while True:
        if steps * 2 > max_steps:
            raise TrotterConvergenceError(f"no convergence to {rtol} within {max_steps} Trotter steps")
        steps *= 2
        refined = evaluate(steps)
        scale = np.maximum(np.abs(refined), s)
        if np.all(np.abs(refined - current) <= rtol * scale):
            break
        current = refined
    mean, var, slope = refined
    dphi = None if abs(slope) < ZERO_GAIN * s else math.sqrt(var) / abs(slope)
    return EchoResult(
        n_atoms=n_atoms,
        phi=phi,
        Q=Q,
        mean_Sy=float(mean),
        var_Sy=float(var),
        slope=float(slope),
        gain_G=float(slope / s),
        delta_phi=dphi,
        metrological_gain_db=gain_db(n_atoms, dphi),
    )


def scatter_noise(n_atoms: int, Q: float, d: float, eta: float, r: float) -> float:
    """Normalised phase variance from spin flips: 2 r Q (1/d + d) / (3 S eta)."""
    s = n_atoms / 2
    d = abs(d)
    return 2 * r * Q * (1 / d + d) / (3 * s * eta)


def cavity_sigma_total(params: CavityParams) -> SigmaBreakdown:
    """Closed-form phase-variance budget sigma^2 = 2S Var(phi)."""
    Q = params.Q
    if Q <= 0:
        raise ValueError("twisting strength must be > 0 for the variance budget")
    s = params.spin
    d = abs(params.d)
    growth = math.exp(Q**2 / (2 * s))
    s0 = growth / Q**2
    s_deph = 4 * growth / (Q * d)
    s_sc = scatter_noise(params.n_atoms, Q, d, params.eta, params.r)
    return SigmaBreakdown(s0, s_deph, s_sc, s0 + s_deph + s_sc)


def approx_optimum_sigma(n_atoms: int, eta: float, r: float, d: float) -> float:
    """Approximate optimum at Qd = sqrt(6 S eta / r): r(1+d^2)/(6 S eta) + sqrt(32 r (1+1/d^2)/(3 S eta))."""
    s = n_atoms / 2
    return r * (1 + d**2) / (6 * s * eta) + math.sqrt(32 * r * (1 + 1 / d**2) / (3 * s * eta))


def plateau_sigma(n_atoms: int, eta: float, r: float) -> float:
    """Detuning-independent plateau sqrt(32 r / (3 S eta))."""
    return math.sqrt(32 * r / (3 * (n_atoms / 2) * eta))


def _sigma(n_atoms, eta, r, Q, d):
    return cavity_sigma_total(CavityParams(n_atoms, eta, d, Q, r)).sigma_total_sq


def optimize_cavity(n_atoms: int, eta: float, r: float = 0.5, d: float | None = None) -> tuple[float, float, float]:
    """Minimise the closed-form sigma^2 over Q (and d when ``d`` is None).

    Returns ``(Q*, d*, sigma_total_sq)``. The search is bounded on log Q in
    [1e-3, 4 sqrt(2S)] and log d in [1e-2, 1e4], seeded at the approximate
    optimum Qd = sqrt(6 S eta / r).
    """
    if not eta > 0:
        raise ValueError(f"cooperativity must be > 0, got {eta}")
    s = n_atoms / 2
    lq_lo, lq_hi = math.log(1e-3), math.log(4 * math.sqrt(2 * s))

    def best_q(dd):
        # coarse scan guards against a distant local minimum, then bounded refinement
        grid = np.linspace(lq_lo, lq_hi, 200)
        vals = [_sigma(n_atoms, eta, r, math.exp(lq), dd) for lq in grid]
        i = int(np.argmin(vals))
        lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
        res = minimize_scalar(
            lambda lq: _sigma(n_atoms, eta, r, math.exp(lq), dd),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": 1e-10, "maxiter": 500},
        )
        if not res.success:
            raise OptimizationError(f"Q optimisation failed at d={dd}: {res.message}")
        return math.exp(res.x), float(res.fun)

    if d is not None:
        q, val = best_q(d)
        return q, d, val

    def objective(x):
        return _sigma(n_atoms, eta, r, math.exp(x[0]), math.exp(x[1]))

    d_seed = max(1.0, min(100.0, (s * eta / r) ** 0.125))
    q_seed, _ = best_q(d_seed)
    res = minimize(
        objective,
        x0=[math.log(q_seed), math.log(d_seed)],
        method="Nelder-Mead",
        bounds=[(lq_lo, lq_hi), (math.log(1e-2), math.log(1e4))],
        options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000},
    )
    if not res.success:
        raise OptimizationError(f"joint Q, d optimisation failed: {res.message}")
    q, dd = math.exp(res.x[0]), math.exp(res.x[1])
    # polish Q at the found detuning
    q, val = best_q(dd)
    return q, dd, val
