"""Rydberg-dressed twisting in an optical-lattice clock.

Rates are angular frequencies; lengths in metres. Everything that feeds the
metrological gain is a dimensionless ratio (delta_R / Gamma, epsilon,
C_tilde), so results do not depend on the absolute rate scale.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .echo import analytic_slope, optimal_twisting

__all__ = [
    "RydbergParams",
    "DressingWarning",
    "twisting_rate",
    "twisting_rate_from_range",
    "interaction_range",
    "detuning_window",
    "critical_atom_number",
    "max_twisting",
    "sigma0_exact",
    "rydberg_gain",
    "rydberg_gain_curve",
]

WEAK_DRESSING_LIMIT = 0.3


class DressingWarning(UserWarning):
    """Rydberg population epsilon is not small; the dressed-twisting picture degrades."""


@dataclass(frozen=True)
class RydbergParams:
    n_atoms: int
    Omega: float | None = None
    delta_R: float | None = None
    C6: float | None = None
    a: float | None = None
    Gamma: float | None = None
    epsilon: float | None = None
    C_tilde: float | None = None

    def __post_init__(self):
        for name in ("Omega", "C6", "a", "Gamma", "C_tilde"):
            val = getattr(self, name)
            if val is not None and not val > 0:
                raise ValueError(f"{name} must be > 0, got {val}")
        if self.delta_R is not None and self.delta_R == 0:
            raise ValueError("delta_R must be non-zero")
        if self.Omega is not None and self.delta_R is not None:
            eps = (self.n_atoms / 2) * self.Omega**2 / (4 * self.delta_R**2)
            if self.epsilon is None:
                object.__setattr__(self, "epsilon", eps)
            elif not math.isclose(eps, self.epsilon, rel_tol=1e-9):
                raise ValueError(f"epsilon={self.epsilon} inconsistent with Omega, delta_R (gives {eps})")
        if None not in (self.C6, self.Gamma, self.a):
            ct = self.C6 / (self.Gamma * self.a**6)
            if self.C_tilde is None:
                object.__setattr__(self, "C_tilde", ct)
            elif not math.isclose(ct, self.C_tilde, rel_tol=1e-9):
                raise ValueError(f"C_tilde={self.C_tilde} inconsistent with C6, Gamma, a (gives {ct})")


def interaction_range(delta_R: float, C6: float) -> float:
    """Soft-core radius L = (1/2) [C6 / (2 delta_R)]^(1/6)."""
    if not delta_R > 0:
        raise ValueError(f"delta_R must be > 0, got {delta_R}")
    return 0.5 * (C6 / (2 * delta_R)) ** (1 / 6)


def twisting_rate_from_range(n_atoms: int, epsilon: float, C6: float, L: float) -> float:
    """|chi| = eps^2 C6 / (2^5 N^2 L^6)."""
    return epsilon**2 * C6 / (32 * n_atoms**2 * L**6)


def twisting_rate(params: RydbergParams) -> float:
    """chi = Omega^4 / (16 delta_R^3); sign follows delta_R.

    When C6 is also given, the range-based expression at
    L = interaction_range(delta_R, C6) is evaluated as a consistency check.
    """
    if params.Omega is None or params.delta_R is None:
        raise ValueError("twisting rate needs Omega and delta_R")
    if params.epsilon is not None and params.epsilon > WEAK_DRESSING_LIMIT:
        warnings.warn(f"epsilon={params.epsilon:.3g} is not << 1", DressingWarning)
    chi = params.Omega**4 / (16 * params.delta_R**3)
    if params.C6 is not None and params.delta_R > 0:
        L = interaction_range(params.delta_R, params.C6)
        other = twisting_rate_from_range(params.n_atoms, params.epsilon, params.C6, L)
        if not math.isclose(abs(chi), other, rel_tol=1e-9):
            raise ValueError(f"inconsistent inputs: chi={chi} but range formula gives {other}")
    return chi


def detuning_window(n_atoms: float, epsilon: float, C_tilde: float) -> tuple[float, float, bool]:
    """Allowed detuning band in units of Gamma: ``(delta_max, delta_min, feasible)``.

    delta_max = C_tilde / (2^9 N^2) keeps all atoms within the interaction range;
    delta_min = N^(3/2) / (2 eps) reaches Q_opt before the first scattering event.
    """
    if n_atoms < 2:
        raise ValueError("detuning window needs N >= 2")
    hi = C_tilde / (2**9 * n_atoms**2)
    lo = n_atoms**1.5 / (2 * epsilon)
    return hi, lo, hi > lo


def critical_atom_number(epsilon: float, C_tilde: float) -> float:
    """N_cr = (C_tilde eps / 2^8)^(2/7), where the detuning window closes."""
    return (C_tilde * epsilon / 2**8) ** (2 / 7)


def max_twisting(n_atoms: float, epsilon: float, C_tilde: float) -> float:
    """Largest Q with delta_R at its range ceiling and 2 N Gamma_sc t = 1.

    With chi = 4 eps^2 delta_R / N^2 and t = 1/(2 eps Gamma) this is
    Q = N chi t = eps C_tilde / (2^8 N^3).
    """
    delta_max = C_tilde / (2**9 * n_atoms**2)
    chi_t = 4 * epsilon**2 * delta_max / n_atoms**2 / (2 * epsilon)
    return n_atoms * chi_t


def sigma0_exact(n_atoms: int, Q: float) -> float:
    """Unitary normalised phase variance 2S dphi^2 = S^2 / slope^2."""
    s = n_atoms / 2
    return s**2 / analytic_slope(n_atoms, Q) ** 2


def rydberg_gain(n_atoms: int, epsilon: float, C_tilde: float) -> tuple[float, float, float]:
    """(ideal gain dB, constrained gain dB, Q used) at one atom number.

    Below N_cr the unitary optimum is reachable. Above it the twisting is capped
    at :func:`max_twisting` (model choice reproducing the turnover).
    """
    q_opt, dphi = optimal_twisting(n_atoms)
    ideal = -10 * math.log10(n_atoms * dphi**2)
    if n_atoms <= critical_atom_number(epsilon, C_tilde):
        return ideal, ideal, q_opt
    q = min(max_twisting(n_atoms, epsilon, C_tilde), q_opt)
    return ideal, -10 * math.log10(sigma0_exact(n_atoms, q)), q


def rydberg_gain_curve(n_grid, epsilon: float = 0.1, C_tilde=(1e10, 1e11)) -> list[dict]:
    """Gain vs N for the ideal echo and the emission-limited Rydberg echo.

    ``C_tilde`` may be a scalar or a (low, high) band; the band gives lower and
    upper envelopes of the constrained curve.
    """
    n_grid = np.atleast_1d(n_grid)
    if n_grid.size == 0:
        raise ValueError("empty atom-number grid")
    band = tuple(np.atleast_1d(C_tilde).astype(float))
    lo_c, hi_c = min(band), max(band)
    rows = []
    for n in n_grid:
        n = int(n)
        ideal, g_lo, q_lo = rydberg_gain(n, epsilon, lo_c)
        _, g_hi, q_hi = rydberg_gain(n, epsilon, hi_c)
        dmax_lo, dmin, feas_lo = detuning_window(n, epsilon, lo_c)
        dmax_hi, _, feas_hi = detuning_window(n, epsilon, hi_c)
        rows.append(
            {
                "N": n,
                "delta_min_over_gamma": dmin,
                "delta_max_over_gamma_lo": dmax_lo,
                "delta_max_over_gamma_hi": dmax_hi,
                "feasible_lo": feas_lo,
                "feasible_hi": feas_hi,
                "Q_lo": q_lo,
                "Q_hi": q_hi,
                "gain_ideal_db": ideal,
                "gain_constrained_lo_db": g_lo,
                "gain_constrained_hi_db": g_hi,
            }
        )
    return rows
