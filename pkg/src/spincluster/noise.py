"""Ornstein-Uhlenbeck dephasing bath acting on the electron spin.

The noise field B(t) enters as B(t) * sigma_z/2 on the electron, with B in
rad/s. Calibration against coherence measurements uses

    T2* = sqrt(2) / b        T2 = (12 tau_c / b^2)^(1/3)

with the stationary deviation fixed to sigma_st = b / sqrt(2), so that the
quasi-static free-induction envelope is exp(-b^2 t^2 / 4) and both formulas
correspond to the exp(-1/2) point of the fitted envelopes. The Monte-Carlo
free-induction oracle in the tests is the binding check on this convention.

Because the bath term commutes with every free-precession Hamiltonian used
here (electron-diagonal), a noisy free segment is exactly the noiseless
propagator followed by an electron z rotation by the integrated phase
phi = int B dt. `segment_phases` produces those integrals; the generic
piecewise-constant path (`apply_noise_segment`) is retained as a cross-check.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit

from .states import I2, Z, QuantumState, apply_gate
from .hamiltonian import propagator


@dataclass(frozen=True)
class OUNoise:
    b: float  # rad/s
    tau_c: float  # s
    dt: float | None = None  # s; None = auto per use site
    seed: int = 0

    def __post_init__(self):
        if self.b <= 0 or self.tau_c <= 0:
            raise ValueError("b and tau_c must be positive")
        if self.dt is not None and self.dt > self.tau_c / 10:
            raise ValueError("dt must be <= tau_c / 10")

    @property
    def sigma_st(self) -> float:
        return self.b / np.sqrt(2)

    @property
    def t2_star(self) -> float:
        return np.sqrt(2) / self.b

    @property
    def t2_hahn(self) -> float:
        return (12 * self.tau_c / self.b ** 2) ** (1 / 3)

    def step_dt(self, shortest_segment: float) -> float:
        if self.dt is not None:
            return self.dt
        return min(self.tau_c / 50, shortest_segment / 20)


def ou_from_coherence(t2_star: float, t2_hahn: float, dt: float | None = None, seed: int = 0) -> OUNoise:
    if t2_star <= 0:
        raise ValueError("T2* must be positive")
    if t2_hahn <= t2_star:
        raise ValueError("T2 must exceed T2* (motional-narrowing formulas)")
    b = np.sqrt(2) / t2_star
    tau_c = t2_hahn ** 3 * b ** 2 / 12
    return OUNoise(b=b, tau_c=tau_c, dt=dt, seed=seed)


def _ou_step_coeffs(noise: OUNoise, dt: float):
    decay = np.exp(-dt / noise.tau_c)
    kick = noise.sigma_st * np.sqrt(1 - decay ** 2)
    return decay, kick


def sample_trajectory(noise: OUNoise, duration: float, rng: np.random.Generator | None = None) -> np.ndarray:
    """Stationary OU samples B(0), B(dt), ..., covering [0, duration]."""
    if duration <= 0:
        raise ValueError("duration must be positive")
    rng = np.random.default_rng(noise.seed) if rng is None else rng
    dt = noise.step_dt(duration)
    n = int(np.ceil(duration / dt)) + 1
    decay, kick = _ou_step_coeffs(noise, dt)
    out = np.empty(n)
    out[0] = noise.sigma_st * rng.standard_normal()
    xi = rng.standard_normal(n - 1)
    for i in range(1, n):
        out[i] = out[i - 1] * decay + kick * xi[i - 1]
    return out


def segment_phases(
    noise: OUNoise,
    durations: np.ndarray,
    n_traj: int,
    rng: np.random.Generator,
    steps_per_segment: int = 20,
) -> np.ndarray:
    """Integrated phases int B dt per free segment, shape (n_traj, n_segments).

    One independent stationary OU path per trajectory, continuous across
    segments (the bath does not reset between gates).
    """
    durations = np.asarray(durations, float)
    b_now = noise.sigma_st * rng.standard_normal(n_traj)
    phases = np.empty((n_traj, len(durations)))
    for j, seg in enumerate(durations):
        dt = min(noise.tau_c / 50, seg / steps_per_segment)
        n_steps = max(int(np.ceil(seg / dt)), 1)
        dt = seg / n_steps
        decay, kick = _ou_step_coeffs(noise, dt)
        acc = np.zeros(n_traj)
        for _ in range(n_steps):
            acc += b_now * dt
            b_now = b_now * decay + kick * rng.standard_normal(n_traj)
        phases[:, j] = acc
    return phases


def apply_noise_segment(
    state: QuantumState,
    trajectory: np.ndarray,
    h: np.ndarray,
    t: float,
    dt: float,
    targets=None,
) -> QuantumState:
    """Piecewise-constant evolution under H + B(t_k) sigma_z/2 (x) I.

    `h` is in Hz on (electron, nucleus); B samples are rad/s. Slow reference
    path; the production path uses `segment_phases`.
    """
    n_steps = int(np.round(t / dt))
    if n_steps * dt > t + 1e-15 or len(trajectory) < n_steps:
        raise ValueError("trajectory does not cover the requested time")
    if targets is None:
        targets = [0, 1]
    bath = np.kron(Z / 2, I2)
    for k in range(n_steps):
        h_tot = h + (trajectory[k] / (2 * np.pi)) * bath  # rad/s -> Hz
        state = apply_gate(state, propagator(h_tot, dt), targets)
    return state


# ---------------------------------------------------------------- oracles

def fid_echo_signals(noise: OUNoise, times: np.ndarray, n_traj: int, seed: int | None = None):
    """Monte-Carlo <sigma_x> for free induction and Hahn echo at the given times.

    Times must be positive; the echo places its pi pulse at t/2. Returns
    (fid_signal, echo_signal) arrays.
    """
    rng = np.random.default_rng(noise.seed if seed is None else seed)
    times = np.asarray(times, float)
    t_max = float(times.max())
    # one fine grid pass; phases at t and t/2 read off the cumulative integral
    dt = min(noise.tau_c / 50, t_max / 2000)
    n = int(np.ceil(t_max / dt)) + 1
    decay, kick = _ou_step_coeffs(noise, dt)
    b_now = noise.sigma_st * rng.standard_normal(n_traj)
    cum = np.zeros((n_traj, n + 1))
    for i in range(n):
        cum[:, i + 1] = cum[:, i] + b_now * dt
        b_now = b_now * decay + kick * rng.standard_normal(n_traj)
    def phase_at(t):
        idx = np.clip(t / dt, 0, n)
        lo = np.floor(idx).astype(int)
        frac = idx - lo
        hi = np.minimum(lo + 1, n)
        return cum[:, lo] * (1 - frac) + cum[:, hi] * frac
    fid = np.array([np.mean(np.cos(phase_at(t))) for t in times])
    echo = np.array([np.mean(np.cos(phase_at(t) - 2 * phase_at(t / 2))) for t in times])
    return fid, echo


def fit_t2star(times: np.ndarray, signal: np.ndarray) -> float:
    """Fit exp(-(t/T2*)^2 / 2) to a free-induction decay."""
    def model(t, t2s):
        return np.exp(-(t / t2s) ** 2 / 2)
    popt, _ = curve_fit(model, times, signal, p0=[times[len(times) // 2]])
    return float(abs(popt[0]))


def fit_t2_hahn(times: np.ndarray, signal: np.ndarray) -> float:
    """Fit exp(-(t/T2)^3 / 2) to a Hahn-echo decay."""
    def model(t, t2):
        return np.exp(-(t / t2) ** 3 / 2)
    popt, _ = curve_fit(model, times, signal, p0=[times[len(times) // 2]])
    return float(abs(popt[0]))
