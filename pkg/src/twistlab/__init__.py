"""Twisting-echo metrology with collective spins.

Dicke-basis simulation of one-axis twisting echoes, their dissipative cavity
and Rydberg implementations, reference bounds, and a sweep CLI.
"""
__version__ = "0.1.0"

from .baselines import ghz_noisy_bound, optimal_squeezing, qcrb_delta_phi, squeezing_point
from .dissipation import CavityParams, cavity_sigma_total, echo_with_dephasing, optimize_cavity
from .echo import DetectionNoise, EchoResult, analytic_slope, gain_db, numeric_slope, optimal_twisting, run_echo
from .rydberg import RydbergParams, critical_atom_number, detuning_window, rydberg_gain
from .spin import DickeState, SpinDensityMatrix, apply_rotation, apply_twist, make_css, moments
from .wigner import wigner_grid

__all__ = [
    "__version__",
    "CavityParams",
    "DetectionNoise",
    "DickeState",
    "EchoResult",
    "RydbergParams",
    "SpinDensityMatrix",
    "analytic_slope",
    "apply_rotation",
    "apply_twist",
    "cavity_sigma_total",
    "critical_atom_number",
    "detuning_window",
    "echo_with_dephasing",
    "gain_db",
    "ghz_noisy_bound",
    "make_css",
    "moments",
    "numeric_slope",
    "optimal_squeezing",
    "optimal_twisting",
    "optimize_cavity",
    "qcrb_delta_phi",
    "run_echo",
    "rydberg_gain",
    "squeezing_point",
    "wigner_grid",
]
