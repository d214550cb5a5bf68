"""Unitary twisting echo: sensitivity, signal amplification and detection noise."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .spin import apply_rotation, apply_twist, make_css, moments

__all__ = [
    "EchoResult",
    "DetectionNoise",
    "SlopeDomainWarning",
    "run_echo",
    "echo_state",
    "numeric_slope",
    "analytic_slope",
    "optimal_twisting",
    "noisy_sensitivity",
    "gain_db",
    "gain_sweep",
    "default_q_grid",
]

SLOPE_RTOL = 1e-6
# |G| below this counts as no signal; Delta phi is then undefined
ZERO_GAIN = 1e-9


class SlopeDomainWarning(RuntimeWarning):
    """cos(Q/2S) <= 0: the closed-form slope is outside the small-twist regime it was derived for."""


@dataclass(frozen=True)
class EchoResult:
    n_atoms: int
    phi: float
    Q: float
    mean_Sy: float
    var_Sy: float
    slope: float
    gain_G: float
    delta_phi: float | None
    metrological_gain_db: float | None


@dataclass(frozen=True)
class DetectionNoise:
    """Gaussian readout noise, ``Delta S_meas = r_det * sqrt(S/2)``."""

    r_det: float = 0.0

    def __post_init__(self):
        if not self.r_det >= 0:
            raise ValueError(f"r_det must be >= 0, got {self.r_det}")

    @classmethod
    def from_delta_n(cls, n_atoms: int, delta_n: float) -> "DetectionNoise":
        # Delta n = 2 Delta S_meas and Delta S_CSS = sqrt(N/4)
        if delta_n < 0:
            raise ValueError(f"delta_n must be >= 0, got {delta_n}")
        return cls(delta_n / math.sqrt(n_atoms))

    def delta_s_meas(self, n_atoms: int) -> float:
        return self.r_det * math.sqrt(n_atoms / 4)

    def delta_n(self, n_atoms: int) -> float:
        return 2 * self.delta_s_meas(n_atoms)


def echo_state(n_atoms: int, Q: float, phi: float):
    """Twist, rotate about y by ``phi``, untwist, starting from the x-polarised CSS."""
    state = apply_twist(make_css(n_atoms), Q, +1)
    state = apply_rotation(state, "y", phi)
    return apply_twist(state, Q, -1)


def _mean_sy(n_atoms, Q, phi):
    return moments(echo_state(n_atoms, Q, phi), "Sy")[0]


def _central_difference(n_atoms, Q, phi, h):
    return (_mean_sy(n_atoms, Q, phi + h) - _mean_sy(n_atoms, Q, phi - h)) / (2 * h)


def analytic_slope(n_atoms: int, Q: float) -> float:
    """d<S_y>/dphi at phi = 0: S (2S-1) sin(x) cos^(2S-2)(x), x = Q/(2S).

    The power is evaluated as ``exp((2S-2) log|cos x|)`` so that large spins do
    not underflow early. Warns with :class:`SlopeDomainWarning` when
    ``cos x <= 0`` and the exponent is positive.
    """
    if n_atoms < 1:
        raise ValueError("atom number must be >= 1")
    s = n_atoms / 2
    x = Q / n_atoms
    power = n_atoms - 2
    c = math.cos(x)
    if power == 0:
        cos_term = 1.0
    else:
        if c <= 0:
            warnings.warn(f"Q/(2S) = {x:.6g} >= pi/2; cos^(2S-2) taken with its sign", SlopeDomainWarning)
        if c == 0:
            return 0.0
        cos_term = math.exp(power * math.log(abs(c)))
        if c < 0 and power % 2:
            cos_term = -cos_term
    return s * (2 * s - 1) * math.sin(x) * cos_term


def numeric_slope(n_atoms: int, Q: float, phi: float = 0.0, h: float | None = None) -> float:
    """Central finite difference of the echo signal <S_y> with respect to phi.

    Default step ``h = 1e-6 / S``. At phi = 0, if the result misses the
    closed-form slope by more than 1e-6 relative, a Richardson-extrapolated
    estimate from steps h and 2h is returned instead.
    """
    s = n_atoms / 2
    if h is None:
        h = 1e-6 / s
    slope = _central_difference(n_atoms, Q, phi, h)
    if phi != 0.0 or Q == 0:
        return slope
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SlopeDomainWarning)
        reference = analytic_slope(n_atoms, Q)
    if reference != 0 and abs(slope - reference) > SLOPE_RTOL * abs(reference):
        wide = _central_difference(n_atoms, Q, phi, 2 * h)
        slope = (4 * slope - wide) / 3
    return slope


def gain_db(n_atoms: int, delta_phi: float | None) -> float | None:
    """Metrological gain -10 log10(N dphi^2) in dB (None when undefined)."""
    if delta_phi is None or not np.isfinite(delta_phi) or delta_phi <= 0:
        return None
    return -10 * math.log10(n_atoms * delta_phi**2)


def _sensitivity(n_atoms, var, slope, extra_var=0.0):
    s = n_atoms / 2
    if abs(slope) < ZERO_GAIN * s:
        return None
    return math.sqrt(var + extra_var) / abs(slope)


def run_echo(n_atoms: int, Q: float, phi: float = 0.0) -> EchoResult:
    """Moments of S_y after the echo, with slope and sensitivity at ``phi``."""
    if n_atoms < 1:
        raise ValueError(f"atom number must be >= 1, got {n_atoms}")
    if Q < 0:
        raise ValueError(f"twisting strength must be >= 0, got {Q}")
    s = n_atoms / 2
    mean, var = moments(echo_state(n_atoms, Q, phi), "Sy")
    slope = numeric_slope(n_atoms, Q, phi)
    dphi = _sensitivity(n_atoms, var, slope)
    return EchoResult(
        n_atoms=n_atoms,
        phi=phi,
        Q=Q,
        mean_Sy=mean,
        var_Sy=var,
        slope=slope,
        gain_G=slope / s,
        delta_phi=dphi,
        metrological_gain_db=gain_db(n_atoms, dphi),
    )


def optimal_twisting(n_atoms: int) -> tuple[float, float]:
    """Closed-form optimum ``Q_opt = 2S arccot(sqrt(2S-2))`` and the sensitivity there.

    Approaches sqrt(N) and sqrt(e)/N for large N.
    """
    if n_atoms < 2:
        raise ValueError("optimal twisting needs N >= 2")
    s = n_atoms / 2
    q_opt = 2 * s * math.atan2(1.0, math.sqrt(2 * s - 2))
    dphi = math.sqrt(s / 2) / analytic_slope(n_atoms, q_opt)
    return q_opt, dphi


def noisy_sensitivity(n_atoms: int, Q: float, noise: DetectionNoise) -> float | None:
    """Echo sensitivity with Gaussian readout noise added to the S_y variance."""
    base = run_echo(n_atoms, Q, 0.0)
    return _sensitivity(n_atoms, base.var_Sy, base.slope, noise.delta_s_meas(n_atoms) ** 2)


def default_q_grid(n_atoms: int, points: int = 200) -> np.ndarray:
    """Log-spaced twisting strengths from 0.1 up to Q_GHZ = N pi / 2."""
    return np.geomspace(0.1, n_atoms * np.pi / 2, points)


def gain_sweep(n_atoms: int, q_grid=None, noise_grid=None, Q: float | None = None) -> list[dict]:
    """Metrological gain of the echo over twisting strengths or readout noise.

    With ``noise_grid`` (values of Delta n) the twisting strength is fixed at
    ``Q`` (default Q_opt). Rows with no signal carry ``None`` in the gain
    columns.
    """
    rows = []
    if noise_grid is not None:
        if Q is None:
            Q = optimal_twisting(n_atoms)[0]
        noise_grid = np.atleast_1d(noise_grid)
        if noise_grid.size == 0:
            raise ValueError("empty detection-noise grid")
        base = run_echo(n_atoms, Q, 0.0)
        for dn in noise_grid:
            noise = DetectionNoise.from_delta_n(n_atoms, float(dn))
            dphi = _sensitivity(n_atoms, base.var_Sy, base.slope, noise.delta_s_meas(n_atoms) ** 2)
            rows.append(_gain_row({"delta_n": float(dn), "r_det": noise.r_det, "Q": Q}, n_atoms, dphi))
        return rows
    if q_grid is None:
        q_grid = default_q_grid(n_atoms)
    q_grid = np.atleast_1d(q_grid)
    if q_grid.size == 0:
        raise ValueError("empty twisting-strength grid")
    for q in q_grid:
        res = run_echo(n_atoms, float(q), 0.0)
        rows.append(_gain_row({"Q": float(q), "gain_G": res.gain_G, "var_Sy": res.var_Sy}, n_atoms, res.delta_phi))
    return rows


def _gain_row(row, n_atoms, dphi):
    g = gain_db(n_atoms, dphi)
    row["delta_phi"] = dphi
    row["gain_db"] = g
    row["gain_linear"] = None if g is None else 1 / (n_atoms * dphi**2)
    return row
