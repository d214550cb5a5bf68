"""Spherical Wigner quasiprobability of a collective spin.

W(theta, phi) = sqrt((2S+1)/(4 pi)) * sum_{k,q} rho_kq Y_kq(theta, phi)

with multipoles rho_kq = Tr(rho T_kq^dagger) and

    T_kq = sum_{m,m'} (-1)^(S-m') <S m; S -m' | k q> |m><m'|.

The prefactor makes W integrate to Tr(rho) = 1 over the unit sphere.
Clebsch-Gordan coefficients come from the Racah sum in exact integer
arithmetic, so there is no cancellation error for the moderate spins used in
phase-space plots (cost grows like (2S+1)^3).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.special import roots_legendre, sph_harm_y

from .spin import DickeState, SpinDensityMatrix, to_density_matrix

__all__ = ["clebsch_gordan", "multipoles", "tensor_operator", "WignerGrid", "wigner_grid", "sphere_integral"]


@lru_cache(maxsize=None)
def _cg_twice(j1: int, m1: int, j2: int, m2: int, J: int, M: int) -> float:
    # all arguments doubled so half-integers stay integral
    if m1 + m2 != M or abs(m1) > j1 or abs(m2) > j2 or abs(M) > J:
        return 0.0
    if not abs(j1 - j2) <= J <= j1 + j2 or (j1 + j2 + J) % 2:
        return 0.0
    if (j1 + m1) % 2 or (j2 + m2) % 2 or (J + M) % 2:
        return 0.0
    f = math.factorial
    a = (j1 + j2 - J) // 2
    b = (j1 - m1) // 2
    c = (j2 + m2) // 2
    d = (J - j2 + m1) // 2
    e = (J - j1 - m2) // 2
    prefactor = Fraction(
        (J + 1) * f((J + j1 - j2) // 2) * f((J - j1 + j2) // 2) * f(a),
        f((j1 + j2 + J) // 2 + 1),
    ) * (
        f((J + M) // 2) * f((J - M) // 2) * f((j1 - m1) // 2) * f((j1 + m1) // 2) * f((j2 - m2) // 2) * f((j2 + m2) // 2)
    )
    total = Fraction(0)
    for k in range(max(0, -d, -e), min(a, b, c) + 1):
        total += Fraction((-1) ** k, f(k) * f(a - k) * f(b - k) * f(c - k) * f(d + k) * f(e + k))
    if total == 0:
        return 0.0
    value = math.sqrt(prefactor * total * total)
    return value if total > 0 else -value


def clebsch_gordan(j1: float, m1: float, j2: float, m2: float, J: float, M: float) -> float:
    """<j1 m1; j2 m2 | J M> in the Condon-Shortley convention."""
    args = [2 * x for x in (j1, m1, j2, m2, J, M)]
    if any(abs(x - round(x)) > 1e-9 for x in args):
        raise ValueError("angular momenta must be integers or half-integers")
    return _cg_twice(*(int(round(x)) for x in args))


def tensor_operator(n_atoms: int, k: int, q: int) -> np.ndarray:
    """Dense T_kq acting on the spin-N/2 multiplet (rows and columns ordered m = -S..S)."""
    two_s = n_atoms
    dim = n_atoms + 1
    out = np.zeros((dim, dim))
    for i in range(dim):
        two_m = 2 * i - two_s
        two_mp = two_m - 2 * q
        j = (two_mp + two_s) // 2
        if not 0 <= j < dim:
            continue
        sign = -1.0 if ((two_s - two_mp) // 2) % 2 else 1.0
        out[i, j] = sign * _cg_twice(two_s, two_m, two_s, -two_mp, 2 * k, 2 * q)
    return out


def multipoles(rho: SpinDensityMatrix) -> dict[tuple[int, int], complex]:
    """Multipole components rho_kq = Tr(rho T_kq^dagger) for k = 0..2S."""
    n = rho.n_atoms
    elems = rho.elements
    out = {}
    for k in range(n + 1):
        for q in range(-k, k + 1):
            t = tensor_operator(n, k, q)
            out[(k, q)] = complex(np.sum(elems * t))
    return out


@dataclass(frozen=True, eq=False)
class WignerGrid:
    theta: np.ndarray  # polar angle from +z
    phi: np.ndarray  # azimuth from +x
    values: np.ndarray  # shape (len(theta), len(phi))
    theta_weights: np.ndarray | None = None  # Gauss-Legendre weights in cos(theta), when used

    def min(self) -> float:
        return float(self.values.min())


def wigner_grid(state, n_theta: int, n_phi: int, nodes: str = "uniform") -> WignerGrid:
    """Sample W on a (theta, phi) grid.

    ``nodes="uniform"`` spaces theta evenly over [0, pi] including the poles;
    ``nodes="gauss"`` uses Gauss-Legendre nodes in cos(theta), which together
    with the uniform periodic phi grid integrates W exactly when
    ``n_theta > S`` and ``n_phi > 2S``.
    """
    if n_theta < 2 or n_phi < 2:
        raise ValueError(f"grid too coarse: need at least 2 points per axis, got {n_theta}x{n_phi}")
    rho = to_density_matrix(state) if isinstance(state, DickeState) else state
    weights = None
    if nodes == "uniform":
        theta = np.linspace(0, np.pi, n_theta)
    elif nodes == "gauss":
        x, weights = roots_legendre(n_theta)
        theta = np.arccos(x[::-1])
        weights = weights[::-1]
    else:
        raise ValueError(f"unknown theta nodes {nodes!r}")
    phi = np.linspace(0, 2 * np.pi, n_phi, endpoint=False)
    # Y_kq(theta, phi) = Y_kq(theta, 0) exp(i q phi)
    n = rho.n_atoms
    polar = np.zeros((len(theta), 2 * n + 1), dtype=complex)
    for (k, q), coeff in multipoles(rho).items():
        if coeff != 0:
            polar[:, q + n] += coeff * sph_harm_y(k, q, theta, 0.0)
    azimuthal = np.exp(1j * np.outer(np.arange(-n, n + 1), phi))
    values = math.sqrt((n + 1) / (4 * math.pi)) * (polar @ azimuthal).real
    return WignerGrid(theta, phi, values, weights)


def sphere_integral(grid: WignerGrid) -> float:
    """Quadrature of W over the sphere on a Gauss-Legendre grid."""
    if grid.theta_weights is None:
        raise ValueError("exact quadrature needs a grid built with nodes='gauss'")
    dphi = 2 * np.pi / len(grid.phi)
    return float(np.sum(grid.theta_weights[:, None] * grid.values) * dphi)
