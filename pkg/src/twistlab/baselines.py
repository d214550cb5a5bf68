"""Reference curves for the echo: QCRB, direct-detection squeezing, noisy GHZ readout."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .echo import DetectionNoise, gain_db
from .spin import CollectiveOperators, apply_rotation, apply_twist, covariance_zy, make_css, moments

__all__ = [
    "BaselineCurve",
    "twisted_state",
    "qcrb_delta_phi",
    "qcrb_curve",
    "SqueezingPoint",
    "squeezing_point",
    "squeezing_curve",
    "squeezing_noise_curve",
    "optimal_squeezing",
    "ghz_fringe",
    "ghz_fisher",
    "ghz_noisy_bound",
    "sql_curve",
    "heisenberg_curve",
]

LABELS = ("qcrb", "squeezing_direct", "ghz_noisy", "sql", "heisenberg")


@dataclass
class BaselineCurve:
    label: str
    points: list = field(default_factory=list)  # (parameter, gain_db or None)

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"unknown baseline label {self.label!r}")

    def gains(self) -> np.ndarray:
        return np.array([np.nan if g is None else g for _, g in self.points])


def _grid(values):
    values = np.atleast_1d(np.asarray(values, dtype=float))
    if values.size == 0:
        raise ValueError("empty grid")
    return values


def twisted_state(n_atoms: int, Q: float):
    return apply_twist(make_css(n_atoms), Q, +1)


def _covariance_xyz(state) -> np.ndarray:
    ops = CollectiveOperators.for_atoms(state.n_atoms)
    c = state.amplitudes
    vecs = [ops.apply(a, c) for a in "xyz"]
    means = [np.vdot(c, v).real for v in vecs]
    return np.array([[np.vdot(vecs[i], vecs[j]).real - means[i] * means[j] for j in range(3)] for i in range(3)])


def qcrb_delta_phi(n_atoms: int, Q: float, generator: str = "y") -> float:
    """Pure-state bound 1/sqrt(F_Q) of the twisted state.

    ``generator="y"`` gives 1/(2 Delta S_y) for rotations about y. ``"optimal"``
    maximises over rotation axes, F_Q = 4 * largest eigenvalue of the
    symmetrised S_x, S_y, S_z covariance matrix.
    """
    state = twisted_state(n_atoms, Q)
    if generator == "y":
        _, var = moments(state, "Sy")
    elif generator == "optimal":
        var = float(np.linalg.eigvalsh(_covariance_xyz(state))[-1])
    else:
        raise ValueError(f"unknown generator {generator!r}")
    return 1 / (2 * math.sqrt(var))


def qcrb_curve(n_atoms: int, q_grid) -> BaselineCurve:
    return BaselineCurve("qcrb", [(float(q), gain_db(n_atoms, qcrb_delta_phi(n_atoms, q))) for q in _grid(q_grid)])


def sql_curve(grid) -> BaselineCurve:
    return BaselineCurve("sql", [(float(x), 0.0) for x in _grid(grid)])


def heisenberg_curve(n_atoms: int, grid) -> BaselineCurve:
    return BaselineCurve("heisenberg", [(float(x), 10 * math.log10(n_atoms)) for x in _grid(grid)])


@dataclass(frozen=True)
class SqueezingPoint:
    Q: float
    mean_Sx: float
    var_min: float
    angle: float  # quadrature S_z cos(a) + S_y sin(a) with minimal variance
    delta_phi: float | None


def squeezing_point(n_atoms: int, Q: float, noise: DetectionNoise | None = None) -> SqueezingPoint:
    """Direct-detection sensitivity of the twisted state, ``sqrt(V_min + dS_meas^2) / |<S_x>|``."""
    state = twisted_state(n_atoms, Q)
    mean_sx, _ = moments(state, "Sx")
    vzz, vyy, czy = covariance_zy(state)
    half_sum = (vzz + vyy) / 2
    radius = math.hypot((vzz - vyy) / 2, czy)
    var_min = half_sum - radius
    angle = 0.5 * math.atan2(-2 * czy, -(vzz - vyy))
    extra = 0.0 if noise is None else noise.delta_s_meas(n_atoms) ** 2
    # contrast collapse: no usable mean spin
    if abs(mean_sx) < 1e-12 * n_atoms:
        dphi = None
    else:
        dphi = math.sqrt(max(var_min, 0.0) + extra) / abs(mean_sx)
    return SqueezingPoint(Q, mean_sx, var_min, angle, dphi)


def squeezing_curve(n_atoms: int, q_grid, noise: DetectionNoise | None = None):
    """Squeezing gain vs Q, plus the continuous (unwrapped) optimal quadrature angles."""
    pts = [squeezing_point(n_atoms, float(q), noise) for q in _grid(q_grid)]
    curve = BaselineCurve("squeezing_direct", [(p.Q, gain_db(n_atoms, p.delta_phi)) for p in pts])
    angles = np.unwrap(2 * np.array([p.angle for p in pts])) / 2
    return curve, angles


def optimal_squeezing(n_atoms: int) -> SqueezingPoint:
    """Best noiseless direct-detection sensitivity over twisting strength."""
    hi = math.log(max(2 * n_atoms ** (1 / 3), 2.0) * 4)
    grid = np.linspace(math.log(1e-3), hi, 120)

    def f(lq):
        p = squeezing_point(n_atoms, math.exp(lq))
        return math.inf if p.delta_phi is None else p.delta_phi

    vals = [f(x) for x in grid]
    i = int(np.argmin(vals))
    res = minimize_scalar(
        f, bounds=(grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]), method="bounded", options={"xatol": 1e-10}
    )
    return squeezing_point(n_atoms, math.exp(res.x))


def squeezing_noise_curve(n_atoms: int, delta_n_grid, Q: float | None = None) -> BaselineCurve:
    """Direct detection of the squeezed state at fixed Q (default: noiseless optimum) vs Delta n."""
    if Q is None:
        Q = optimal_squeezing(n_atoms).Q
    pts = []
    for dn in _grid(delta_n_grid):
        p = squeezing_point(n_atoms, Q, DetectionNoise.from_delta_n(n_atoms, float(dn)))
        pts.append((float(dn), gain_db(n_atoms, p.delta_phi)))
    return BaselineCurve("squeezing_direct", pts)


def ghz_fringe(n_atoms: int):
    """Outcome distribution of an S_x measurement on R_y(phi)(|y> + |-y>)/sqrt(2).

    Returns arrays (m, A, B, C) with ``p_m(phi) = A + B cos(N phi) + C sin(N phi)``.
    """
    css = make_css(n_atoms)
    plus_y = apply_rotation(css, "z", math.pi / 2)
    minus_y = apply_rotation(css, "z", -math.pi / 2)
    # S_x eigenbasis amplitudes: <m_x|psi> = (R_y(-pi/2) psi)_m
    u = apply_rotation(plus_y, "y", -math.pi / 2).amplitudes
    w = apply_rotation(minus_y, "y", -math.pi / 2).amplitudes
    # R_y(phi)|+-y> = exp(-+ i S phi)|+-y>
    a = 0.5 * (np.abs(u) ** 2 + np.abs(w) ** 2)
    z = np.conj(u) * w
    return css.m, a, z.real, -z.imag


def _smoothed(m, coeffs, sigma):
    # Gaussian readout noise of std sigma (in m units) on a grid that contains every m
    step = min(0.5, sigma / 8)
    per_unit = math.ceil(1 / step)
    h = 1 / per_unit
    half_width = math.ceil(6 * sigma / h)
    kernel_x = np.arange(-half_width, half_width + 1) * h
    kernel = np.exp(-0.5 * (kernel_x / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))
    n_fine = (len(m) - 1) * per_unit + 1
    out = []
    for c in coeffs:
        spikes = np.zeros(n_fine)
        spikes[::per_unit] = c
        out.append(np.convolve(spikes, kernel))
    return out, h


def ghz_fisher(n_atoms: int, delta_n: float, phis) -> np.ndarray:
    """Classical Fisher information of the noisy S_x readout of the GHZ state at each phi."""
    m, a, b, c = ghz_fringe(n_atoms)
    phis = np.atleast_1d(phis)
    cos, sin = np.cos(n_atoms * phis), np.sin(n_atoms * phis)
    sigma = delta_n / 2
    if sigma < 1 / 12:
        # kernels of neighbouring outcomes do not overlap within 6 sigma
        weight = 1.0
    else:
        (a, b, c), weight = _smoothed(m, (a, b, c), sigma)
    p = a[None, :] + b[None, :] * cos[:, None] + c[None, :] * sin[:, None]
    dp = n_atoms * (-b[None, :] * sin[:, None] + c[None, :] * cos[:, None])
    # far tails: roundoff in the fringe terms would dominate dp^2 / p
    mask = (a[None, :] > 1e-13 * a.max()) & (p > 1e-300)
    terms = np.where(mask, dp**2 / np.where(mask, p, 1.0), 0.0)
    return weight * terms.sum(axis=1)


def ghz_noisy_bound(n_atoms: int, delta_n_grid, n_phi: int = 512) -> BaselineCurve:
    """Cramer-Rao bound 1/sqrt(max_phi F) for the GHZ state read out with resolution Delta n."""
    phis = np.linspace(0, math.pi / n_atoms, n_phi)
    pts = []
    for dn in _grid(delta_n_grid):
        if dn < 0:
            raise ValueError("delta_n must be >= 0")
        fisher = ghz_fisher(n_atoms, float(dn), phis).max()
        pts.append((float(dn), gain_db(n_atoms, 1 / math.sqrt(fisher))))
    return BaselineCurve("ghz_noisy", pts)
