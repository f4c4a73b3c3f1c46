"""Dense state-vector / density-matrix engine with role-labeled wires.

Registers are small (<= ~14 qubits), so everything is plain dense numpy.
Wire 0 is the leftmost tensor factor. States are immutable: every operation
returns a new QuantumState.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

NORM_TOL = 1e-12
UNITARY_TOL = 1e-10
PSD_TOL = -1e-10


class RoleKind(Enum):
    ELECTRON = "electron"
    NUCLEAR = "nuclear"
    PHOTON = "photon"


@dataclass(frozen=True)
class QubitRole:
    kind: RoleKind
    index: int = 0

    def __str__(self):
        if self.kind is RoleKind.ELECTRON:
            return "e"
        return f"{self.kind.value[0]}{self.index}"


def electron() -> QubitRole:
    return QubitRole(RoleKind.ELECTRON)


def nuclear(i: int) -> QubitRole:
    return QubitRole(RoleKind.NUCLEAR, i)


def photon(i: int) -> QubitRole:
    return QubitRole(RoleKind.PHOTON, i)


def _check_roles(wires: Sequence[QubitRole]):
    electrons = [w for w in wires if w.kind is RoleKind.ELECTRON]
    if len(electrons) > 1:
        raise ValueError("register admits at most one electron wire")
    for kind in (RoleKind.NUCLEAR, RoleKind.PHOTON):
        idx = sorted(w.index for w in wires if w.kind is kind)
        if idx != list(range(len(idx))):
            raise ValueError(f"{kind.value} indices must be contiguous from 0")


class QuantumState:
    """Pure state (vector) or mixed state (density matrix) over labeled wires."""

    def __init__(self, data: np.ndarray, wires: Sequence[QubitRole], validate: bool = True):
        data = np.asarray(data, dtype=complex)
        self.wires = tuple(wires)
        n = len(self.wires)
        dim = 2 ** n
        if data.ndim == 1:
            if data.shape != (dim,):
                raise ValueError(f"state vector length {data.shape} != 2^{n}")
            self.pure = True
        elif data.ndim == 2:
            if data.shape != (dim, dim):
                raise ValueError(f"density matrix shape {data.shape} != (2^{n}, 2^{n})")
            self.pure = False
        else:
            raise ValueError("state data must be a vector or a square matrix")
        self.data = data
        if validate:
            _check_roles(self.wires)
            self._check_normalisation()

    @property
    def n_qubits(self) -> int:
        return len(self.wires)

    @property
    def dim(self) -> int:
        return 2 ** self.n_qubits

    def _check_normalisation(self):
        if self.pure:
            if abs(np.linalg.norm(self.data) - 1.0) > 1e-9:
                raise ValueError("pure state is not normalised")
        else:
            if abs(np.trace(self.data).real - 1.0) > 1e-9:
                raise ValueError("density matrix trace != 1")
            if np.linalg.norm(self.data - self.data.conj().T) > 1e-9:
                raise ValueError("density matrix is not Hermitian")

    def wire_index(self, role: QubitRole) -> int:
        return self.wires.index(role)

    def density_matrix(self) -> np.ndarray:
        if self.pure:
            return np.outer(self.data, self.data.conj())
        return self.data

    def to_mixed(self) -> "QuantumState":
        return QuantumState(self.density_matrix(), self.wires, validate=False)

    def copy(self) -> "QuantumState":
        return QuantumState(self.data.copy(), self.wires, validate=False)


@dataclass(frozen=True)
class Unitary:
    matrix: np.ndarray
    arity: int

    @staticmethod
    def of(matrix: np.ndarray) -> "Unitary":
        matrix = np.asarray(matrix, dtype=complex)
        d = matrix.shape[0]
        arity = int(round(np.log2(d)))
        if matrix.shape != (d, d) or 2 ** arity != d:
            raise ValueError("unitary must be square with power-of-two dimension")
        if np.linalg.norm(matrix.conj().T @ matrix - np.eye(d)) > UNITARY_TOL:
            raise ValueError("matrix is not unitary within tolerance")
        return Unitary(matrix, arity)


# Common gates
I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
CZ = np.diag([1, 1, 1, -1]).astype(complex)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)


def rx(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(theta: float) -> np.ndarray:
    return np.array(
        [[np.exp(-1j * theta / 2), 0], [0, np.exp(1j * theta / 2)]], dtype=complex
    )


def _apply_matrix_vec(vec: np.ndarray, u: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """Apply a 2^k x 2^k matrix to the given wires of a length-2^n vector."""
    k = len(targets)
    psi = vec.reshape([2] * n)
    src = list(targets)
    psi = np.moveaxis(psi, src, range(k))
    psi = psi.reshape(2 ** k, -1)
    psi = u @ psi
    psi = psi.reshape([2] * n)
    psi = np.moveaxis(psi, range(k), src)
    return psi.reshape(-1)


def expand_unitary(u: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """Embed a k-qubit unitary acting on `targets` into the full 2^n space."""
    full = np.eye(2 ** n, dtype=complex)
    return np.column_stack(
        [_apply_matrix_vec(full[:, i], u, targets, n) for i in range(2 ** n)]
    )


def apply_gate(state: QuantumState, u: Unitary | np.ndarray, targets: Sequence[int]) -> QuantumState:
    if isinstance(u, Unitary):
        mat, arity = u.matrix, u.arity
    else:
        mat = np.asarray(u, dtype=complex)
        arity = int(round(np.log2(mat.shape[0])))
    targets = list(targets)
    if len(targets) != arity:
        raise ValueError(f"gate arity {arity} != {len(targets)} targets")
    if len(set(targets)) != len(targets):
        raise ValueError("duplicate target wire")
    n = state.n_qubits
    if any(t < 0 or t >= n for t in targets):
        raise ValueError("target wire out of range")
    if state.pure:
        out = _apply_matrix_vec(state.data, mat, targets, n)
    else:
        big = expand_unitary(mat, targets, n)
        out = big @ state.data @ big.conj().T
    return QuantumState(out, state.wires, validate=False)


def add_photon_qubit(state: QuantumState, initial: int = 0) -> QuantumState:
    if not state.pure:
        raise ValueError("photon wires can only be appended to pure states")
    if initial not in (0, 1):
        raise ValueError("initial basis label must be 0 or 1")
    n_photons = sum(1 for w in state.wires if w.kind is RoleKind.PHOTON)
    ket = np.zeros(2, dtype=complex)
    ket[initial] = 1.0
    data = np.kron(state.data, ket)
    return QuantumState(data, state.wires + (photon(n_photons),), validate=False)


_BASIS_ROT = {
    "z": I2,
    "x": H,
    "y": H @ np.diag([1, -1j]).astype(complex),  # maps |+i>,|-i> -> |0>,|1>
}


def project_measure(
    state: QuantumState,
    wire: int,
    basis: str = "z",
    outcome: int | None = None,
    rng: np.random.Generator | None = None,
):
    """Projective measurement of one wire. Returns (outcome, collapsed, probability).

    With `outcome=None` the result is sampled from the Born rule using `rng`.
    """
    n = state.n_qubits
    if wire < 0 or wire >= n:
        raise ValueError("wire out of range")
    rot = _BASIS_ROT[basis]
    rotated = apply_gate(state, rot.conj().T, [wire]) if basis != "z" else state

    if rotated.pure:
        psi = rotated.data.reshape([2] * n)
        probs = [float(np.sum(np.abs(np.take(psi, m, axis=wire)) ** 2)) for m in (0, 1)]
    else:
        rho = rotated.data
        diag = np.real(np.diag(rho)).reshape([2] * n)
        probs = [float(np.sum(np.take(diag, m, axis=wire))) for m in (0, 1)]

    if outcome is None:
        rng = rng if rng is not None else np.random.default_rng()
        m = int(rng.random() >= probs[0])
    else:
        m = int(outcome)
        if probs[m] < 1e-12:
            raise ValueError(f"forced outcome {m} has probability ~0")
    p = probs[m]

    proj = np.zeros((2, 2), dtype=complex)
    proj[m, m] = 1.0
    if rotated.pure:
        collapsed = _apply_matrix_vec(rotated.data, proj, [wire], n) / np.sqrt(p)
    else:
        big = expand_unitary(proj, [wire], n)
        collapsed = big @ rotated.data @ big / p
    out = QuantumState(collapsed, state.wires, validate=False)
    if basis != "z":
        out = apply_gate(out, rot, [wire])
    return m, out, p


def discard_wire(state: QuantumState, wire: int, renumber: bool = True) -> QuantumState:
    """Drop a wire that is in a product |0> or |1> state after measurement."""
    n = state.n_qubits
    if state.pure:
        psi = state.data.reshape([2] * n)
        sub0 = np.take(psi, 0, axis=wire).reshape(-1)
        sub1 = np.take(psi, 1, axis=wire).reshape(-1)
        sub = sub0 if np.linalg.norm(sub0) >= np.linalg.norm(sub1) else sub1
        data = sub / np.linalg.norm(sub)
    else:
        keep = [i for i in range(n) if i != wire]
        return partial_trace(state, keep)
    wires = [w for i, w in enumerate(state.wires) if i != wire]
    if renumber:
        wires = _renumber(wires)
    return QuantumState(data, wires, validate=False)


def _renumber(wires):
    counters = {RoleKind.NUCLEAR: 0, RoleKind.PHOTON: 0}
    out = []
    for w in wires:
        if w.kind is RoleKind.ELECTRON:
            out.append(w)
        else:
            out.append(QubitRole(w.kind, counters[w.kind]))
            counters[w.kind] += 1
    return out


def partial_trace(state: QuantumState, keep: Sequence[int]) -> QuantumState:
    keep = list(keep)
    if not keep:
        raise ValueError("must keep at least one wire")
    n = state.n_qubits
    rho = state.density_matrix()
    traced = [i for i in range(n) if i not in keep]
    t = rho.reshape([2] * (2 * n))
    row_perm = keep + traced
    perm = row_perm + [n + i for i in row_perm]
    t = np.transpose(t, perm)
    dk, dt = 2 ** len(keep), 2 ** len(traced)
    t = t.reshape(dk, dt, dk, dt)
    reduced = np.trace(t, axis1=1, axis2=3)
    wires = _renumber([state.wires[i] for i in keep])
    return QuantumState(reduced, wires, validate=False)


def state_fidelity(rho: QuantumState, psi: QuantumState) -> float:
    """sqrt(<psi|rho|psi>) -- note the square-root convention, used throughout."""
    if rho.n_qubits != psi.n_qubits:
        raise ValueError("dimension mismatch")
    if not psi.pure:
        raise ValueError("reference state must be pure")
    vec = psi.data
    overlap = np.real(vec.conj() @ rho.density_matrix() @ vec)
    return float(np.sqrt(max(overlap, 0.0)))


def max_pure_fidelity(rho: QuantumState) -> float:
    """max over pure |a> of sqrt(<a|rho|a>) = sqrt of the largest eigenvalue."""
    mat = rho.density_matrix()
    if np.linalg.norm(mat - mat.conj().T) > 1e-9:
        raise ValueError("density matrix is not Hermitian")
    lam = np.linalg.eigvalsh(mat)[-1]
    return float(np.sqrt(max(lam, 0.0)))
