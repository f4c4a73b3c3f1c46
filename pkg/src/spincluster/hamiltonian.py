"""Electron-nuclear Hamiltonian of a group-IV defect in the rotating frame.

All Hamiltonians are expressed in ordinary-frequency units (Hz); the 2*pi
factor enters only inside the propagator, so hyperfine constants (70 MHz)
and gyromagnetic ratios (GHz/T) can be used directly.

Conventions: wire 0 = electron, wire 1 = nucleus; z is the defect symmetry
axis; the off-axis field component is confined to x (By = 0).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .states import I2, QuantumState, X, Y, Z, apply_gate

# default gyromagnetic ratios (Hz/T); 29Si from standard nuclear data
GAMMA_E_DEFAULT = 14e9
GAMMA_N_SI29 = -8.465e6


class SecularApproximationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SpinSystemParams:
    a_par: float  # Hz
    a_perp: float = 0.0  # Hz
    gamma_e: float = GAMMA_E_DEFAULT  # Hz/T
    gamma_n: float = GAMMA_N_SI29  # Hz/T
    b_field: tuple = (0.0, 0.0, 0.0)  # Tesla, (Bx, By, Bz)
    omega_rabi: float = 0.0  # Hz, microwave Rabi frequency (real)
    omega_mw: float = 0.0  # Hz, microwave drive frequency
    lambda_so: float = 50e9  # Hz, spin-orbit splitting

    def __post_init__(self):
        if self.a_par <= 0:
            raise ValueError("a_par must be positive")

    @property
    def secular_valid(self) -> bool:
        bx, by, _ = self.b_field
        return self.gamma_e * np.hypot(bx, by) < 0.1 * self.lambda_so


@dataclass(frozen=True)
class RotatingFrameParams:
    delta: float = 0.0  # Hz, detuning of the drive from the electron splitting

    @staticmethod
    def on_resonance() -> "RotatingFrameParams":
        return RotatingFrameParams(0.0)

    @staticmethod
    def from_params(p: SpinSystemParams) -> "RotatingFrameParams":
        return RotatingFrameParams(p.omega_mw - p.gamma_e * p.b_field[2])


@dataclass(frozen=True)
class PrecessionAxes:
    omega_plus: np.ndarray  # rad/s
    omega_minus: np.ndarray  # rad/s

    @property
    def antiparallel(self) -> bool:
        up = self.omega_plus / np.linalg.norm(self.omega_plus)
        um = self.omega_minus / np.linalg.norm(self.omega_minus)
        return float(np.dot(up, um)) < 0.0


def rotating_hamiltonian(
    p: SpinSystemParams,
    rf: RotatingFrameParams | None = None,
    include_a_perp: bool = False,
) -> np.ndarray:
    """4x4 Hermitian matrix, Hz units, on (electron, nucleus)."""
    if rf is None:
        rf = RotatingFrameParams.on_resonance()
    if not p.secular_valid:
        warnings.warn(
            "gamma_e * B_xy exceeds 0.1 * lambda_SO; secular approximation dubious",
            SecularApproximationWarning,
        )
    bx, by, bz = p.b_field
    b_dot_sigma = bx * X + by * Y + bz * Z
    h = (
        rf.delta * np.kron(Z / 2, I2)
        + p.omega_rabi * np.kron(X / 2, I2)
        + p.a_par * np.kron(Z / 2, Z / 2)
        + p.gamma_n * np.kron(I2, b_dot_sigma / 2)
    )
    if include_a_perp:
        h = h + p.a_perp * (np.kron(X / 2, X / 2) + np.kron(Y / 2, Y / 2))
    return h


def free_hamiltonian(p: SpinSystemParams, include_a_perp: bool = False) -> np.ndarray:
    """Free-precession Hamiltonian (drive off, on-resonance frame)."""
    q = SpinSystemParams(
        a_par=p.a_par, a_perp=p.a_perp, gamma_e=p.gamma_e, gamma_n=p.gamma_n,
        b_field=p.b_field, omega_rabi=0.0, omega_mw=p.omega_mw, lambda_so=p.lambda_so,
    )
    return rotating_hamiltonian(q, RotatingFrameParams.on_resonance(), include_a_perp)


def precession_axes(p: SpinSystemParams) -> PrecessionAxes:
    """Nuclear precession axes conditioned on the electron state, in rad/s."""
    bx, by, bz = p.b_field
    if by != 0.0:
        raise ValueError("off-axis field must lie in the x-z plane (By = 0)")
    base = np.array([p.gamma_n * bx / 2, 0.0, p.gamma_n * bz / 2])
    shift = np.array([0.0, 0.0, p.a_par / 4])
    return PrecessionAxes(
        omega_plus=2 * np.pi * (base + shift),
        omega_minus=2 * np.pi * (base - shift),
    )


def resonance_spacing(p: SpinSystemParams, n: int = 1, kind: str = "conditional") -> float:
    """Interpulse spacing tau (s) satisfying the nuclear-precession resonance.

    conditional:   (|w+| - |w-|) tau = (2n-1) pi
    unconditional: (|w+| - |w-|) tau = 2n pi
    """
    if n < 1:
        raise ValueError("resonance index n must be >= 1")
    axes = precession_axes(p)
    diff = abs(np.linalg.norm(axes.omega_plus) - np.linalg.norm(axes.omega_minus))
    if diff < 1e-30:
        raise ValueError("|w+| == |w-|: resonance condition is degenerate")
    if kind == "conditional":
        return (2 * n - 1) * np.pi / diff
    if kind == "unconditional":
        return 2 * n * np.pi / diff
    raise ValueError(f"unknown resonance kind {kind!r}")


def propagator(h: np.ndarray, t: float) -> np.ndarray:
    """exp(-i 2 pi H t) for H in Hz."""
    if t < 0:
        raise ValueError("evolution time must be non-negative")
    if np.linalg.norm(h - h.conj().T) > 1e-9 * max(np.linalg.norm(h), 1.0):
        raise ValueError("Hamiltonian is not Hermitian")
    vals, vecs = np.linalg.eigh(h)
    return (vecs * np.exp(-2j * np.pi * vals * t)) @ vecs.conj().T


def evolve(state: QuantumState, h: np.ndarray, t: float, targets=None) -> QuantumState:
    """Evolve `targets` (default: all wires) under H for time t."""
    u = propagator(h, t)
    if targets is None:
        targets = list(range(state.n_qubits))
    return apply_gate(state, u, targets)


# expm kept as an independent cross-check path for tests
def propagator_expm(h: np.ndarray, t: float) -> np.ndarray:
    return expm(-2j * np.pi * h * t)
