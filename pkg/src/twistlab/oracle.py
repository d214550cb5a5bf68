"""Independent dense-matrix reference for small spins.

Builds the echo from generic matrix exponentials of the dense collective
operators, and the dephased echo from the exponential of the full Liouvillian
superoperator. Shares nothing with the fast path except the operator matrices.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.linalg import expm

from .dissipation import dephased_echo_state
from .echo import echo_state, optimal_twisting
from .spin import CollectiveOperators, make_css

__all__ = ["dense_echo_state", "dense_dephased_echo", "dense_moments", "oracle_report"]

AXES = ("x", "y", "z")


def _ops(n_atoms):
    ops = CollectiveOperators.for_atoms(n_atoms)
    return {a: ops.dense(a) for a in AXES}


def _twist_hamiltonian(n_atoms, Q, S):
    # chi t = Q / 2S, so H t = (Q / N) S_z^2
    return (Q / n_atoms) * (S["z"] @ S["z"])


def _css_dense(n_atoms, S):
    # +x eigenvector of the dense S_x, phase-fixed to match the pipeline convention
    w, v = np.linalg.eigh(S["x"])
    vec = v[:, np.argmax(w)]
    ref = make_css(n_atoms).amplitudes
    return vec * (np.vdot(vec, ref) / abs(np.vdot(vec, ref)))


def dense_echo_state(n_atoms: int, Q: float, phi: float) -> np.ndarray:
    S = _ops(n_atoms)
    H = _twist_hamiltonian(n_atoms, Q, S)
    psi = _css_dense(n_atoms, S)
    psi = expm(-1j * H) @ psi
    psi = expm(-1j * phi * S["y"]) @ psi
    return expm(1j * H) @ psi


def _liouvillian(H, L):
    # column-stacking vec: vec(A X B) = (B^T kron A) vec(X)
    dim = H.shape[0]
    eye = np.eye(dim)
    ldl = L.conj().T @ L
    return (
        -1j * (np.kron(eye, H) - np.kron(H.T, eye))
        + np.kron(L.conj(), L)
        - 0.5 * np.kron(eye, ldl)
        - 0.5 * np.kron(ldl.T, eye)
    )


def dense_dephased_echo(n_atoms: int, Q: float, gamma_t: float, phi: float) -> np.ndarray:
    """Echo density matrix from the master equation with Lindblad operator sqrt(gamma) S_z."""
    S = _ops(n_atoms)
    dim = n_atoms + 1
    H = _twist_hamiltonian(n_atoms, Q, S)
    L = math.sqrt(gamma_t) * S["z"]
    psi = _css_dense(n_atoms, S)
    rho = np.outer(psi, psi.conj()).reshape(-1, order="F")
    rho = expm(_liouvillian(H, L)) @ rho
    R = expm(-1j * phi * S["y"])
    rho = (R @ rho.reshape(dim, dim, order="F") @ R.conj().T).reshape(-1, order="F")
    rho = expm(_liouvillian(-H, L)) @ rho
    return rho.reshape(dim, dim, order="F")


def dense_moments(n_atoms: int, state: np.ndarray) -> dict[str, float]:
    """Means and variances of S_x, S_y, S_z for a vector or a density matrix."""
    S = _ops(n_atoms)
    rho = np.outer(state, state.conj()) if state.ndim == 1 else state
    out = {}
    for a in AXES:
        mean = np.trace(rho @ S[a]).real
        out[f"mean_S{a}"] = float(mean)
        out[f"var_S{a}"] = float(np.trace(rho @ S[a] @ S[a]).real - mean**2)
    return out


def _pipeline_moments(n_atoms, state):
    from .spin import moments

    out = {}
    for a in AXES:
        mean, var = moments(state, f"S{a}")
        out[f"mean_S{a}"] = mean
        out[f"var_S{a}"] = var
    return out


def oracle_report(n_atoms: int, Q: float | None = None, phi: float = 0.01, gamma_t: float = 0.05) -> list[dict]:
    """Compare the fast pipeline with the dense reference.

    Three cases: the unitary echo, the density-matrix echo at gamma = 0 and
    the dephased echo at ``gamma_t``. One row per case and moment.
    """
    if n_atoms > 12:
        raise ValueError("dense oracle limited to N <= 12")
    if Q is None:
        Q = optimal_twisting(n_atoms)[0] if n_atoms >= 2 else 1.0
    cases = [
        ("unitary", _pipeline_moments(n_atoms, echo_state(n_atoms, Q, phi)), dense_moments(n_atoms, dense_echo_state(n_atoms, Q, phi))),
        (
            "density_gamma0",
            _pipeline_moments(n_atoms, dephased_echo_state(n_atoms, Q, 0.0, phi)),
            dense_moments(n_atoms, dense_dephased_echo(n_atoms, Q, 0.0, phi)),
        ),
        (
            "dephased",
            _pipeline_moments(n_atoms, dephased_echo_state(n_atoms, Q, gamma_t, phi)),
            dense_moments(n_atoms, dense_dephased_echo(n_atoms, Q, gamma_t, phi)),
        ),
    ]
    rows = []
    for case, fast, ref in cases:
        for key in fast:
            rows.append(
                {
                    "case": case,
                    "quantity": key,
                    "pipeline": fast[key],
                    "oracle": ref[key],
                    "abs_error": abs(fast[key] - ref[key]),
                }
            )
    return rows
