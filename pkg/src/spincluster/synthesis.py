"""Compilation of two-qubit electron-nuclear gates from dynamical-decoupling
units (tau_f - pi - 2 tau_f - pi - tau_f) with interleaved electron gates.

The spacings are optimized by gradient-based local search (the trace-overlap
fidelity is analytic in the spacings) from many random starts, alternated
with coordinate-wise sweeps over the discrete electron-gate insertions.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .states import CZ, I2, SWAP, rx, ry, rz
from .hamiltonian import SpinSystemParams, free_hamiltonian, resonance_spacing

SERIAL_FORMAT_VERSION = 1

ELECTRON_GATES = {
    "I": I2,
    "Rx90": rx(np.pi / 2),
    "Ry90": ry(np.pi / 2),
    "Rz90": rz(np.pi / 2),
    "Rx180": rx(np.pi),
}
_GATE_NAMES = list(ELECTRON_GATES)
_GATE_4X4 = {name: np.kron(g, I2) for name, g in ELECTRON_GATES.items()}

PI_PULSE = np.kron(rx(np.pi), I2)

TARGETS = {
    "identity": np.eye(4, dtype=complex),
    "swap": SWAP,
    "cz": CZ,
    "rx90_nuclear": np.kron(I2, rx(np.pi / 2)),
    "rz90_nuclear": np.kron(I2, rz(np.pi / 2)),
}


@dataclass(frozen=True)
class DDSequence:
    """k DD units with spacings tau_f and electron gates between them.

    electron_gates has length k + 1: gate i is applied before unit i, the
    last one after the final unit. Pi pulses are ideal and instantaneous, so
    the wall-clock duration is the free-precession time 4 * sum(tau_f).
    """
    tau_f: tuple
    electron_gates: tuple

    def __post_init__(self):
        if len(self.electron_gates) != len(self.tau_f) + 1:
            raise ValueError("need exactly k+1 electron gate labels")
        if any(t <= 0 for t in self.tau_f):
            raise ValueError("all spacings must be positive")
        for g in self.electron_gates:
            if g not in ELECTRON_GATES:
                raise ValueError(f"unknown electron gate {g!r}")

    @property
    def k(self) -> int:
        return len(self.tau_f)

    @property
    def total_duration(self) -> float:
        return 4.0 * float(np.sum(self.tau_f))

    def segment_durations(self) -> np.ndarray:
        """Free-precession segments in order: (tau, 2tau, tau) per unit."""
        out = []
        for t in self.tau_f:
            out.extend((t, 2 * t, t))
        return np.array(out)


@dataclass(frozen=True)
class SynthesisReport:
    sequence: DDSequence
    unitary_fidelity: float
    iterations: int
    target_name: str
    met_threshold: bool


class UnitCompiler:
    """Caches the eigendecomposition of the free Hamiltonian for fast
    propagators of the DD segments."""

    def __init__(self, p: SpinSystemParams):
        self.params = p
        self.h = free_hamiltonian(p)
        self._vals, self._vecs = np.linalg.eigh(self.h)

    def free_propagator(self, t: float) -> np.ndarray:
        return (self._vecs * np.exp(-2j * np.pi * self._vals * t)) @ self._vecs.conj().T


def dd_unit(tau_f: float, compiler: UnitCompiler) -> np.ndarray:
    """F(tau) Pi F(2 tau) Pi F(tau) on (electron, nucleus)."""
    if tau_f <= 0:
        raise ValueError("tau_f must be positive")
    f1 = compiler.free_propagator(tau_f)
    f2 = compiler.free_propagator(2 * tau_f)
    return f1 @ PI_PULSE @ f2 @ PI_PULSE @ f1


def sequence_unitary(seq: DDSequence, compiler: UnitCompiler) -> np.ndarray:
    u = np.eye(4, dtype=complex)
    for i, t in enumerate(seq.tau_f):
        u = dd_unit(t, compiler) @ _GATE_4X4[seq.electron_gates[i]] @ u
    return _GATE_4X4[seq.electron_gates[-1]] @ u


def noisy_sequence_unitary(seq: DDSequence, compiler: UnitCompiler, phases: np.ndarray) -> np.ndarray:
    """Sequence unitary with an electron z rotation by `phases[j]` (rad)
    inserted in free segment j. Exact because the bath term commutes with
    the free Hamiltonian."""
    def dephase(phi):
        half = phi / 2
        return np.diag([np.exp(-1j * half)] * 2 + [np.exp(1j * half)] * 2)

    u = np.eye(4, dtype=complex)
    j = 0
    for i, t in enumerate(seq.tau_f):
        u = _GATE_4X4[seq.electron_gates[i]] @ u
        f1 = compiler.free_propagator(t)
        f2 = compiler.free_propagator(2 * t)
        u = dephase(phases[j]) @ f1 @ u
        u = dephase(phases[j + 1]) @ f2 @ PI_PULSE @ u
        u = dephase(phases[j + 2]) @ f1 @ PI_PULSE @ u
        j += 3
    return _GATE_4X4[seq.electron_gates[-1]] @ u


def gate_fidelity(u: np.ndarray, target: np.ndarray) -> float:
    """|Tr(target^dag u)| / d -- global-phase-invariant overlap."""
    if u.shape != target.shape:
        raise ValueError("dimension mismatch")
    d = u.shape[0]
    return float(abs(np.trace(target.conj().T @ u)) / d)


# ------------------------------------------------------------ optimization

def _unit_and_derivative(tau_f, compiler):
    f1 = compiler.free_propagator(tau_f)
    f2 = compiler.free_propagator(2 * tau_f)
    h = compiler.h
    b = f1 @ PI_PULSE @ f2 @ PI_PULSE @ f1
    db = -2j * np.pi * (
        h @ b
        + 2 * (f1 @ PI_PULSE @ h @ f2 @ PI_PULSE @ f1)
        + f1 @ PI_PULSE @ f2 @ PI_PULSE @ h @ f1
    )
    return b, db


def _fidelity_and_gradient(taus, gate_mats, target, compiler):
    k = len(taus)
    units = [_unit_and_derivative(t, compiler) for t in taus]
    factors = []
    for i in range(k):
        factors.append(gate_mats[i])
        factors.append(units[i][0])
    factors.append(gate_mats[k])
    m = len(factors)
    right = [np.eye(4, dtype=complex)]
    for f in factors:
        right.append(f @ right[-1])
    left = [np.eye(4, dtype=complex)]
    for f in reversed(factors):
        left.append(left[-1] @ f)
    left = left[::-1]  # left[i] = product of factors applied after factor i-1
    overlap = np.trace(target.conj().T @ right[-1])
    fid = abs(overlap) / 4
    grad = np.zeros(k)
    if abs(overlap) > 1e-300:
        for i in range(k):
            j = 2 * i + 1
            d_overlap = np.trace(target.conj().T @ (left[j + 1] @ units[i][1] @ right[j]))
            grad[i] = np.real(np.conj(overlap) * d_overlap) / (abs(overlap) * 4)
    return fid, grad


def _sequence_fidelity(taus, gate_names, target, compiler):
    seq = DDSequence(tuple(float(t) for t in taus), tuple(gate_names))
    return gate_fidelity(sequence_unitary(seq, compiler), target)


def _polish(taus, gate_names, target, compiler, lb, ub, maxiter=800):
    gate_mats = [_GATE_4X4[g] for g in gate_names]

    def neg(x):
        f, g = _fidelity_and_gradient(x, gate_mats, target, compiler)
        return 1 - f, -g

    res = minimize(
        neg, taus, jac=True, method="L-BFGS-B",
        bounds=[(lb, ub)] * len(taus),
        options=dict(maxiter=maxiter, ftol=1e-16, gtol=1e-14),
    )
    return res.x, 1 - res.fun, res.nfev


def _discrete_sweep(taus, gate_names, target, compiler, rng):
    names = list(gate_names)
    best = _sequence_fidelity(taus, names, target, compiler)
    improved = True
    evals = 0
    while improved:
        improved = False
        for slot in rng.permutation(len(names)):
            current = names[slot]
            for cand in _GATE_NAMES:
                if cand == current:
                    continue
                trial = list(names)
                trial[slot] = cand
                f = _sequence_fidelity(taus, trial, target, compiler)
                evals += 1
                if f > best + 1e-12:
                    best, names, improved = f, trial, True
    return names, best, evals


def synthesize(
    target: np.ndarray | str,
    p: SpinSystemParams,
    threshold: float = 0.999,
    max_k: int = 20,
    seed: int = 0,
    restarts: int = 80,
    hops: int = 8,
    lb: float = 1e-9,
    ub: float | None = None,
    duration_limit: float | None = None,
    ks=None,
) -> SynthesisReport:
    """Search for a DD sequence realizing `target` up to global phase.

    Tries unit counts k in increasing order; per k, random restarts of
    gradient polish + discrete gate sweeps + iterated perturbation. Returns
    the first sequence meeting `threshold` (further polished), otherwise the
    best found with met_threshold=False.
    """
    target_name = target if isinstance(target, str) else "custom"
    if isinstance(target, str):
        target = TARGETS[target]
    if not (0 < threshold <= 1):
        raise ValueError("threshold must be in (0, 1]")
    if max_k < 1:
        raise ValueError("max_k must be >= 1")

    identity_fid = gate_fidelity(np.eye(4, dtype=complex), target)
    if identity_fid >= threshold:
        seq = DDSequence((), ("I",))
        return SynthesisReport(seq, identity_fid, 0, target_name, True)

    compiler = UnitCompiler(p)
    if ub is None:
        ub = 0.7 * resonance_spacing(p, 1, "unconditional")
    rng = np.random.default_rng(seed)
    best_f, best_x, best_names, best_k = 0.0, None, None, 0
    evals = 0
    if ks is None:
        ks = [k for k in range(2, max_k + 1, 2)]

    def admissible(x):
        return duration_limit is None or 4 * np.sum(x) <= duration_limit

    for k in ks:
        for _ in range(restarts):
            names = ["I"] + [_GATE_NAMES[rng.integers(len(_GATE_NAMES))] for _ in range(k)]
            x = rng.uniform(max(lb, 2e-11), 0.75 * ub, size=k)
            x, f, ne = _polish(x, names, target, compiler, lb, ub)
            evals += ne
            names, _, ne = _discrete_sweep(x, names, target, compiler, rng)
            evals += ne
            x, f, ne = _polish(x, names, target, compiler, lb, ub)
            evals += ne
            for _ in range(hops):
                if f >= threshold and admissible(x):
                    break
                xp = np.clip(x + rng.normal(0, 8e-9, size=k), lb, ub)
                xp, fp, ne = _polish(xp, names, target, compiler, lb, ub)
                evals += ne
                names_p, _, ne = _discrete_sweep(xp, names, target, compiler, rng)
                evals += ne
                xp, fp, ne = _polish(xp, names_p, target, compiler, lb, ub)
                evals += ne
                if fp > f and (admissible(xp) or not admissible(x)):
                    x, f, names = xp, fp, names_p
            if f > best_f and (admissible(x) or best_x is None or not admissible(best_x)):
                best_f, best_x, best_names, best_k = f, x.copy(), list(names), k
            if best_f >= threshold and admissible(best_x):
                break
        if best_f >= threshold and admissible(best_x):
            break

    # final polish pass to squeeze the local optimum
    if best_x is not None and len(best_x):
        x, f, ne = _polish(best_x, best_names, target, compiler, lb, ub, maxiter=3000)
        evals += ne
        if f >= best_f and (admissible(x) or not admissible(best_x)):
            best_x, best_f = x, f

    seq = DDSequence(tuple(float(t) for t in best_x), tuple(best_names))
    met = best_f >= threshold and admissible(best_x)
    return SynthesisReport(seq, float(best_f), evals, target_name, met)


# -------------------------------------------------------------- noisy runs

# tomographic input set: products of one-qubit Pauli eigenstates
_ONE_QUBIT_INPUTS = [
    np.array([1, 0], complex),                      # |0>
    np.array([0, 1], complex),                      # |1>
    np.array([1, 1], complex) / np.sqrt(2),         # |+>
    np.array([1, 1j], complex) / np.sqrt(2),        # |+i>
]
TOMOGRAPHY_INPUTS = [np.kron(a, b) for a in _ONE_QUBIT_INPUTS for b in _ONE_QUBIT_INPUTS]


def noisy_gate_fidelity(seq: DDSequence, p: SpinSystemParams, noise, trials: int = 2000, seed: int | None = None):
    """Mean state fidelity (sqrt convention) of the noisy sequence against the
    noiseless sequence outputs on the 16 tomographic product inputs.

    Returns (mean_fidelity, standard_error).
    """
    from .noise import segment_phases

    if trials < 100:
        raise ValueError("need at least 100 trajectories")
    compiler = UnitCompiler(p)
    u_ref = sequence_unitary(seq, compiler)
    refs = [u_ref @ v for v in TOMOGRAPHY_INPUTS]
    rng = np.random.default_rng(noise.seed if seed is None else seed)
    durations = seq.segment_durations()
    phases = segment_phases(noise, durations, trials, rng)
    per_traj = np.empty(trials)
    for i in range(trials):
        u = noisy_sequence_unitary(seq, compiler, phases[i])
        overlaps = [abs(np.vdot(r, u @ v)) ** 2 for r, v in zip(refs, TOMOGRAPHY_INPUTS)]
        per_traj[i] = np.mean(overlaps)
    mean_overlap = float(np.mean(per_traj))
    se_overlap = float(np.std(per_traj, ddof=1) / np.sqrt(trials))
    fid = np.sqrt(max(mean_overlap, 0.0))
    se = se_overlap / (2 * fid) if fid > 0 else se_overlap
    return float(fid), float(se)


# ------------------------------------------------------------ serialization

def serialize_sequence(report: SynthesisReport, p: SpinSystemParams) -> str:
    buf = io.StringIO()
    buf.write(f"format_version {SERIAL_FORMAT_VERSION}\n")
    buf.write(f"target {report.target_name}\n")
    buf.write(f"a_par_hz {p.a_par!r}\n")
    buf.write(f"a_perp_hz {p.a_perp!r}\n")
    buf.write(f"gamma_e_hz_per_t {p.gamma_e!r}\n")
    buf.write(f"gamma_n_hz_per_t {p.gamma_n!r}\n")
    buf.write(f"b_field_t {p.b_field[0]!r} {p.b_field[1]!r} {p.b_field[2]!r}\n")
    buf.write(f"fidelity {report.unitary_fidelity!r}\n")
    buf.write(f"met_threshold {int(report.met_threshold)}\n")
    buf.write(f"k {report.sequence.k}\n")
    for t, g in zip(report.sequence.tau_f, report.sequence.electron_gates):
        buf.write(f"unit {t!r} {g}\n")
    buf.write(f"final_gate {report.sequence.electron_gates[-1]}\n")
    return buf.getvalue()


def deserialize_sequence(text: str):
    """Returns (SynthesisReport, SpinSystemParams)."""
    fields = {}
    units = []
    for line in text.strip().splitlines():
        parts = line.split()
        if parts[0] == "unit":
            units.append((float(parts[1]), parts[2]))
        else:
            fields[parts[0]] = parts[1:]
    if int(fields["format_version"][0]) != SERIAL_FORMAT_VERSION:
        raise ValueError("unsupported gate-file version")
    p = SpinSystemParams(
        a_par=float(fields["a_par_hz"][0]),
        a_perp=float(fields["a_perp_hz"][0]),
        gamma_e=float(fields["gamma_e_hz_per_t"][0]),
        gamma_n=float(fields["gamma_n_hz_per_t"][0]),
        b_field=tuple(float(v) for v in fields["b_field_t"]),
    )
    taus = tuple(t for t, _ in units)
    gates = tuple(g for _, g in units) + (fields["final_gate"][0],)
    seq = DDSequence(taus, gates)
    report = SynthesisReport(
        sequence=seq,
        unitary_fidelity=float(fields["fidelity"][0]),
        iterations=0,
        target_name=fields["target"][0],
        met_threshold=bool(int(fields["met_threshold"][0])),
    )
    return report, p
