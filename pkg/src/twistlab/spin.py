"""Collective spin S = N/2 in the symmetric (Dicke) subspace.

States are stored in the S_z eigenbasis with index ``k = m + S`` running
from 0 (m = -S) to 2S (m = +S). The atom number N is kept as an integer and
S is derived from it, so half-integer spins never enter index arithmetic.

Rotations about y use the factorisation

    R_y(beta) = U exp(-i beta S_z) U^dagger,   U = R_z(pi/2) R_y(pi/2),

with ``U S_z U^dagger = S_y``. Only the fixed matrix d(pi/2) is needed; it is
built column by column from the three-term recursion of the S_x eigenvalue
problem, which stays stable for thousands of atoms where factorial sums
overflow.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

__all__ = [
    "DickeState",
    "SpinDensityMatrix",
    "CollectiveOperators",
    "PositivityWarning",
    "make_css",
    "make_dicke",
    "apply_rotation",
    "apply_twist",
    "moments",
    "wigner_small_d",
    "rotation_matrix",
    "to_density_matrix",
    "covariance_zy",
]

NORM_TOL = 1e-12
POSITIVITY_FLOOR = -1e-10


class PositivityWarning(RuntimeWarning):
    """Density matrix has an eigenvalue below the numerical floor."""


def _check_atoms(n_atoms) -> int:
    if int(n_atoms) != n_atoms or n_atoms < 1:
        raise ValueError(f"atom number must be a positive integer, got {n_atoms!r}")
    return int(n_atoms)


def m_values(n_atoms: int) -> np.ndarray:
    """Magnetic quantum numbers -S..S as floats."""
    return np.arange(n_atoms + 1) - n_atoms / 2


def ladder_elements(n_atoms: int) -> np.ndarray:
    """<m+1|S_+|m> for m = -S..S-1."""
    s = n_atoms / 2
    m = m_values(n_atoms)[:-1]
    return np.sqrt(s * (s + 1) - m * (m + 1))


@dataclass(frozen=True, eq=False)
class DickeState:
    """Pure state of N two-level atoms in the symmetric subspace."""

    n_atoms: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.n_atoms + 1,):
            raise ValueError(
                f"expected {self.n_atoms + 1} amplitudes for N={self.n_atoms}, got shape {amps.shape}"
            )
        object.__setattr__(self, "amplitudes", amps)

    @property
    def spin(self) -> float:
        return self.n_atoms / 2

    @property
    def m(self) -> np.ndarray:
        return m_values(self.n_atoms)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True, eq=False)
class SpinDensityMatrix:
    """Mixed state of the collective spin; rows/columns indexed like DickeState."""

    n_atoms: int
    elements: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.elements, dtype=complex)
        dim = self.n_atoms + 1
        if rho.shape != (dim, dim):
            raise ValueError(f"expected a {dim}x{dim} matrix for N={self.n_atoms}, got {rho.shape}")
        object.__setattr__(self, "elements", rho)

    @property
    def spin(self) -> float:
        return self.n_atoms / 2

    @property
    def m(self) -> np.ndarray:
        return m_values(self.n_atoms)

    def trace(self) -> complex:
        return complex(np.trace(self.elements))

    def check(self, tol: float = NORM_TOL) -> None:
        """Validate Hermiticity and trace; warn (not raise) on slightly negative eigenvalues."""
        rho = self.elements
        if np.max(np.abs(rho - rho.conj().T)) > tol:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1) > tol:
            raise ValueError(f"density matrix trace {np.trace(rho).real!r} != 1")
        lowest = np.linalg.eigvalsh(rho)[0]
        if lowest < POSITIVITY_FLOOR:
            warnings.warn(f"lowest eigenvalue {lowest:.3e} below {POSITIVITY_FLOOR}", PositivityWarning)


@dataclass(frozen=True, eq=False)
class CollectiveOperators:
    """Diagonal and ladder data from which S_x, S_y, S_z are assembled."""

    n_atoms: int
    sz_diag: np.ndarray
    ladder_elems: np.ndarray

    @classmethod
    def for_atoms(cls, n_atoms: int) -> "CollectiveOperators":
        n_atoms = _check_atoms(n_atoms)
        return cls(n_atoms, m_values(n_atoms), ladder_elements(n_atoms))

    def splus(self) -> np.ndarray:
        return np.diag(self.ladder_elems, k=-1).astype(complex)

    def dense(self, axis: str) -> np.ndarray:
        """Dense (2S+1)x(2S+1) matrix of S_axis."""
        sp = self.splus()
        if axis == "x":
            return (sp + sp.T) / 2
        if axis == "y":
            return (sp - sp.T) / 2j
        if axis == "z":
            return np.diag(self.sz_diag).astype(complex)
        raise ValueError(f"unknown axis {axis!r}")

    def apply(self, axis: str, vec: np.ndarray) -> np.ndarray:
        """Tridiagonal action of S_axis along the first axis of ``vec``."""
        vec = np.asarray(vec, dtype=complex)
        if axis == "z":
            return _bcast(self.sz_diag, vec) * vec
        lad = _bcast(self.ladder_elems, vec[:-1])
        up = np.zeros_like(vec)
        down = np.zeros_like(vec)
        up[1:] = lad * vec[:-1]
        down[:-1] = lad * vec[1:]
        if axis == "x":
            return (up + down) / 2
        if axis == "y":
            return (up - down) / 2j
        if axis == "+":
            return up
        if axis == "-":
            return down
        raise ValueError(f"unknown axis {axis!r}")


def _bcast(diag, arr):
    return diag.reshape((-1,) + (1,) * (arr.ndim - 1))


def make_css(n_atoms: int) -> DickeState:
    """Coherent spin state polarised along +x.

    Amplitudes are ``2**-S * sqrt(binom(2S, S+m))``, evaluated in log space.
    """
    n_atoms = _check_atoms(n_atoms)
    k = np.arange(n_atoms + 1)
    log_amp = 0.5 * (gammaln(n_atoms + 1) - gammaln(k + 1) - gammaln(n_atoms - k + 1)) - 0.5 * n_atoms * np.log(2)
    return DickeState(n_atoms, np.exp(log_amp))


def make_dicke(n_atoms: int, m: float) -> DickeState:
    """S_z eigenstate |S, m>."""
    n_atoms = _check_atoms(n_atoms)
    k = m + n_atoms / 2
    if k != int(k) or not 0 <= k <= n_atoms:
        raise ValueError(f"m={m} is not a valid projection for N={n_atoms}")
    amps = np.zeros(n_atoms + 1, dtype=complex)
    amps[int(k)] = 1.0
    return DickeState(n_atoms, amps)


def to_density_matrix(state: DickeState) -> SpinDensityMatrix:
    c = state.amplitudes
    return SpinDensityMatrix(state.n_atoms, np.outer(c, c.conj()))


@lru_cache(maxsize=8)
def _d_half_pi(n_atoms: int) -> np.ndarray:
    # Column m of d(pi/2) is the S_x eigenvector with eigenvalue m:
    #   L[k-1] v[k-1] + L[k] v[k+1] = 2 m v[k].
    # Recurse from the top row towards the centre (growing direction in the
    # classically forbidden band), mirror the lower half with
    # d_{-m',m} = (-1)^(S-m) d_{m',m}, then normalise columns.
    n = n_atoms
    m = m_values(n)
    lad = ladder_elements(n)
    n_rows = n // 2 + 1
    rows = np.empty((n_rows, n + 1))
    prev = np.zeros(n + 1)
    cur = np.ones(n + 1)
    rows[0] = cur
    for i in range(1, n_rows):
        k = n - i + 1
        upper = lad[k] if k < n else 0.0
        nxt = (2 * m * cur - upper * prev) / lad[k - 1]
        prev, cur = cur, nxt
        rows[i] = cur
        big = np.abs(cur) > 1e150
        if big.any():
            rows[: i + 1, big] *= 1e-150
            prev[big] *= 1e-150
            cur[big] *= 1e-150
    full = np.empty((n + 1, n + 1))
    full[n - n_rows + 1:][::-1] = rows
    parity = np.where((n - np.arange(n + 1)) % 2 == 0, 1.0, -1.0)
    full[: n + 1 - n_rows] = rows[: n + 1 - n_rows] * parity
    full /= np.linalg.norm(full, axis=0)
    full.setflags(write=False)
    return full


def _y_frame(n_atoms: int) -> np.ndarray:
    # U = R_z(pi/2) d(pi/2), with U S_z U^dagger = S_y
    phases = np.exp(-0.5j * np.pi * m_values(n_atoms))
    return phases[:, None] * _d_half_pi(n_atoms)


def _real_matmul(a: np.ndarray, v: np.ndarray) -> np.ndarray:
    # keeps the real matrix real instead of upcasting it to complex
    return a @ v.real + 1j * (a @ v.imag)


def _rotate_y(n_atoms: int, angle: float, vec: np.ndarray) -> np.ndarray:
    # exp(-i angle S_y) = U exp(-i angle S_z) U^dagger with U = diag(q) d(pi/2)
    d = _d_half_pi(n_atoms)
    m = m_values(n_atoms)
    quarter = _bcast(np.exp(-0.5j * np.pi * m), vec)
    coeffs = _real_matmul(d.T, quarter.conj() * vec)
    coeffs *= _bcast(np.exp(-1j * angle * m), coeffs)
    return quarter * _real_matmul(d, coeffs)


def wigner_small_d(n_atoms: int, angle: float) -> np.ndarray:
    """Matrix d^S_{m'm}(angle) = <m'|exp(-i angle S_y)|m> (real)."""
    n_atoms = _check_atoms(n_atoms)
    if not np.isfinite(angle):
        raise ValueError("rotation angle must be finite")
    frame = _y_frame(n_atoms)
    phases = np.exp(-1j * angle * m_values(n_atoms))
    return ((frame * phases) @ frame.conj().T).real


def rotation_matrix(n_atoms: int, axis: str, angle: float) -> np.ndarray:
    """Unitary exp(-i angle S_axis) as a dense matrix."""
    if axis == "z":
        return np.diag(np.exp(-1j * angle * m_values(n_atoms)))
    if axis == "y":
        return wigner_small_d(n_atoms, angle).astype(complex)
    if axis == "x":
        quarter = np.exp(-0.5j * np.pi * m_values(n_atoms))
        return (quarter.conj()[:, None] * wigner_small_d(n_atoms, angle)) * quarter
    raise ValueError(f"unknown axis {axis!r}")


def apply_rotation(state, axis: str, angle: float):
    """Apply exp(-i angle S_axis) to a pure or mixed state."""
    if not np.isfinite(angle):
        raise ValueError("rotation angle must be finite")
    n = state.n_atoms
    if isinstance(state, SpinDensityMatrix):
        rot = rotation_matrix(n, axis, angle)
        return SpinDensityMatrix(n, rot @ state.elements @ rot.conj().T)
    vec = state.amplitudes
    if axis == "z":
        out = np.exp(-1j * angle * state.m) * vec
    elif axis == "y":
        out = _rotate_y(n, angle, vec)
    elif axis == "x":
        quarter = np.exp(-0.5j * np.pi * state.m)
        out = quarter.conj() * _rotate_y(n, angle, quarter * vec)
    else:
        raise ValueError(f"unknown axis {axis!r}")
    return DickeState(n, out)


def apply_twist(state, Q: float, sign: int = 1):
    """One-axis twisting exp(-i sign chi t S_z^2) with chi t = Q / (2S)."""
    if Q < 0:
        raise ValueError(f"twisting strength must be non-negative, got {Q}")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    m = state.m
    phase = np.exp(-1j * sign * (Q / state.n_atoms) * m**2)
    if isinstance(state, SpinDensityMatrix):
        return SpinDensityMatrix(state.n_atoms, phase[:, None] * state.elements * phase.conj()[None, :])
    return DickeState(state.n_atoms, phase * state.amplitudes)


_OBSERVABLES = {"Sx": "x", "Sy": "y", "Sz": "z", "x": "x", "y": "y", "z": "z"}


def moments(state, observable: str) -> tuple[float, float]:
    """Mean and variance of a collective spin component.

    Pure states use the tridiagonal action only; density matrices use
    ``Tr(rho O)`` and ``Tr(rho O^2)`` with O applied column-wise.
    """
    axis = _OBSERVABLES.get(observable)
    if axis is None:
        raise ValueError(f"unknown observable {observable!r}")
    ops = CollectiveOperators.for_atoms(state.n_atoms)
    if isinstance(state, SpinDensityMatrix):
        o_rho = ops.apply(axis, state.elements)
        mean = np.trace(o_rho).real
        second = np.trace(ops.apply(axis, o_rho)).real
        return float(mean), float(second - mean**2)
    c = state.amplitudes
    oc = ops.apply(axis, c)
    mean = np.vdot(c, oc).real
    second = np.vdot(oc, oc).real
    return float(mean), float(second - mean**2)


def covariance_zy(state: DickeState) -> tuple[float, float, float]:
    """(Var S_z, Var S_y, symmetrised Cov(S_z, S_y)) of a pure state."""
    ops = CollectiveOperators.for_atoms(state.n_atoms)
    c = state.amplitudes
    zc = ops.apply("z", c)
    yc = ops.apply("y", c)
    mz = np.vdot(c, zc).real
    my = np.vdot(c, yc).real
    vzz = np.vdot(zc, zc).real - mz**2
    vyy = np.vdot(yc, yc).real - my**2
    czy = np.vdot(zc, yc).real - mz * my
    return float(vzz), float(vyy), float(czy)
