"""Cluster-state generation circuit: schedule construction, execution with
optional dephasing noise, completion measurements, and local-unitary
equivalence checks.

Rails map to register wires as wire 0 = electron proxy, wires 1..M-1 =
nuclear register; photons append in emission order. Two schedule styles are
provided: "pedagogical" follows the published step listing literally (SWAP
cycling for every rotation and emission), "lean" is an M=2 variant with one
SWAP and one CZ per column, trading layout fidelity of the intermediate
steps for a shorter noisy sequence. Both produce the same cluster state up
to local unitaries; tests pin that equivalence.
"""
from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field

import numpy as np

from .states import (
    CNOT, CZ, SWAP, I2, QuantumState, QubitRole, RoleKind, add_photon_qubit,
    apply_gate, discard_wire, partial_trace, project_measure, ry,
    state_fidelity,
)
from .hamiltonian import SpinSystemParams
from .synthesis import (
    DDSequence, UnitCompiler, deserialize_sequence, noisy_sequence_unitary,
    sequence_unitary,
)

# y rotation taking |1> to (|0> + |1>)/sqrt(2), the sign convention of the
# published state tracking
RY_PROTO = ry(-np.pi / 2)

PHOTON_LABELS = {0: "L", 1: "R"}  # |1> maps to right-circular


@dataclass(frozen=True)
class ScheduleItem:
    kind: str  # "gate" | "emit" | "measure"
    gate: str | None = None  # "ry" | "swap" | "cz"
    wires: tuple = ()

    def label(self) -> str:
        if self.kind == "emit":
            return "E"
        if self.kind == "measure":
            return f"M{self.wires[0] + 1}"
        if self.gate == "ry":
            return "RY"
        return f"{self.gate.upper()}{self.wires[0] + 1}{self.wires[1] + 1}"


@dataclass
class ProtocolSpec:
    m: int
    n: int
    gate_library: dict
    photon_encoding: str = "polarisation"
    noise: object = None
    params: SpinSystemParams | None = None
    style: str = "pedagogical"
    init_one: bool = False
    completion: str = "corrected"  # or "postselect"
    trials: int = 2000
    seed: int = 0

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("need at least two rails (proxy + 1 nucleus)")
        if self.n < 0:
            raise ValueError("column count must be >= 0")
        if self.style not in ("pedagogical", "lean"):
            raise ValueError(f"unknown schedule style {self.style!r}")
        if self.style == "lean" and self.m != 2:
            raise ValueError("lean schedule is defined for M=2 only")
        if self.photon_encoding not in ("polarisation", "timebin"):
            raise ValueError(f"unknown encoding {self.photon_encoding!r}")
        if self.completion not in ("corrected", "postselect"):
            raise ValueError(f"unknown completion mode {self.completion!r}")
        for g in ("swap", "cz"):
            if self.n > 0 and g not in self.gate_library:
                raise KeyError(f"gate library is missing {g!r}")


@dataclass
class ProtocolResult:
    photonic_state: QuantumState
    fidelity: float
    fidelity_se: float
    prep_fidelity: float | None
    block_fidelity: float | None
    wall_clock_model: float
    postselect_probability: float
    trials: int


def build_schedule(spec: ProtocolSpec) -> list:
    """Ordered gates, emissions, and completion measurements."""
    m = spec.m
    sched = []

    def gate(name, *wires):
        sched.append(ScheduleItem("gate", name, wires))

    if spec.style == "lean":
        gate("ry", 0)
        gate("swap", 0, 1)
        gate("ry", 0)
        for _ in range(spec.n):
            gate("cz", 0, 1)
            sched.append(ScheduleItem("emit"))
            gate("ry", 0)
            gate("swap", 0, 1)
            sched.append(ScheduleItem("emit"))
            gate("ry", 0)
    else:
        # preparation: rotate every rail qubit via SWAP cycling
        gate("ry", 0)
        for j in range(1, m):
            gate("swap", 0, j)
            gate("ry", 0)
            gate("swap", 0, j)
        for _ in range(spec.n):
            # entangle rails
            for j in range(1, m):
                gate("cz", 0, j)
            # emission: cycle each qubit through the proxy
            gate("swap", 0, 1)
            sched.append(ScheduleItem("emit"))
            gate("swap", 0, 1)
            sched.append(ScheduleItem("emit"))
            for j in range(2, m):
                gate("swap", 0, j)
                sched.append(ScheduleItem("emit"))
            for j in range(m - 1, 0, -1):
                gate("swap", 0, j)
            # rotate every rail qubit for the next column
            gate("ry", 0)
            gate("swap", 0, 1)
            gate("ry", 0)
            for j in range(2, m):
                gate("swap", 0, j)
                gate("ry", 0)
                gate("swap", 0, j)
    for w in range(m):
        sched.append(ScheduleItem("measure", wires=(w,)))
    return sched


def schedule_labels(sched) -> list:
    return [item.label() for item in sched]


def wall_clock_model(spec: ProtocolSpec) -> float:
    """Sum of scheduled gate durations; ideal unitaries contribute zero."""
    total = 0.0
    for item in build_schedule(spec):
        if item.kind == "gate" and item.gate in spec.gate_library:
            g = spec.gate_library[item.gate]
            if isinstance(g, DDSequence):
                total += g.total_duration
    return total


def _initial_state(spec: ProtocolSpec) -> QuantumState:
    wires = [QubitRole(RoleKind.ELECTRON)] + [
        QubitRole(RoleKind.NUCLEAR, j) for j in range(spec.m - 1)
    ]
    amp = np.zeros(2 ** spec.m, dtype=complex)
    amp[-1 if spec.init_one else 0] = 1.0
    return QuantumState(amp, tuple(wires))


def emit_photon(state: QuantumState, encoding: str = "polarisation") -> QuantumState:
    """Append a photon in |0> and apply CNOT from the electron. Both
    encodings share this map; the label set differs only in reporting."""
    state = add_photon_qubit(state, 0)
    electron = next(
        i for i, w in enumerate(state.wires) if w.kind == RoleKind.ELECTRON
    )
    return apply_gate(state, CNOT, [electron, state.n_qubits - 1])


def _gate_unitary(spec, item, compiler, phases, cursor):
    """4x4 (or 2x2 for ry) unitary for a schedule item; advances the phase
    cursor when the gate is a noisy DD sequence."""
    if item.gate == "ry":
        return spec.gate_library.get("ry", RY_PROTO), cursor
    g = spec.gate_library[item.gate]
    if isinstance(g, DDSequence):
        n_seg = 3 * g.k
        if phases is None:
            return sequence_unitary(g, compiler), cursor
        u = noisy_sequence_unitary(g, compiler, phases[cursor:cursor + n_seg])
        return u, cursor + n_seg
    return g, cursor


def _execute(spec: ProtocolSpec, sched, compiler, phases=None) -> QuantumState:
    """Run the schedule up to (not including) the completion measurements."""
    state = _initial_state(spec)
    cursor = 0
    for item in sched:
        if item.kind == "gate":
            u, cursor = _gate_unitary(spec, item, compiler, phases, cursor)
            state = apply_gate(state, u, list(item.wires))
        elif item.kind == "emit":
            state = emit_photon(state, spec.photon_encoding)
    return state


def _compiler_for(spec: ProtocolSpec):
    needs = any(isinstance(g, DDSequence) for g in spec.gate_library.values())
    if not needs:
        return None
    if spec.params is None:
        raise ValueError("spin parameters required when the library holds DD sequences")
    return UnitCompiler(spec.params)


def _spin_branch(state: QuantumState, m: int, outcome_bits):
    """Project the m spin wires onto the given z outcomes without
    renormalizing; returns (photonic amplitude vector, probability)."""
    amp = state.data.reshape((2,) * state.n_qubits)
    idx = tuple(outcome_bits) + (slice(None),) * (state.n_qubits - m)
    vec = np.ascontiguousarray(amp[idx]).ravel()
    return vec, float(np.vdot(vec, vec).real)


def _apply_photon_locals(vec: np.ndarray, locals_: list) -> np.ndarray:
    n = int(np.log2(len(vec)))
    t = vec.reshape((2,) * n)
    for i, u in enumerate(locals_):
        t = np.moveaxis(np.tensordot(u, t, axes=([1], [i])), 0, i)
    return t.ravel()


def find_corrections(spec: ProtocolSpec):
    """Per-spin-outcome local photon unitaries mapping each completion
    branch of the noiseless ideal-gate circuit onto the all-|1> branch.

    Returns {outcome bits: list of 2x2 unitaries}. Raises if any branch is
    not locally equivalent to the reference (residual > 1e-9)."""
    ideal_spec = _ideal_twin(spec)
    sched = build_schedule(ideal_spec)
    state = _execute(ideal_spec, sched, None)
    ref, p_ref = _spin_branch(state, spec.m, (1,) * spec.m)
    if p_ref < 1e-12:
        raise ValueError("all-|1> completion branch has zero probability")
    ref = ref / np.sqrt(p_ref)
    corrections = {}
    rng = np.random.default_rng(7)
    for bits in np.ndindex(*(2,) * spec.m):
        if all(b == 1 for b in bits):
            corrections[bits] = [I2] * (spec.m * spec.n)
            continue
        vec, p = _spin_branch(state, spec.m, bits)
        if p < 1e-12:
            corrections[bits] = None
            continue
        vec = vec / np.sqrt(p)
        overlap, locals_ = _max_local_overlap(vec, ref, rng, n_starts=6)
        if 1 - overlap > 1e-9:
            raise ValueError(
                f"branch {bits} is not locally correctable (overlap {overlap})"
            )
        corrections[bits] = locals_
    return corrections


def _ideal_twin(spec: ProtocolSpec) -> ProtocolSpec:
    return ProtocolSpec(
        m=spec.m, n=spec.n, gate_library=ideal_library(),
        photon_encoding=spec.photon_encoding, style=spec.style,
        init_one=spec.init_one, completion=spec.completion,
    )


def ideal_library() -> dict:
    return {"swap": SWAP.copy(), "cz": CZ.copy()}


def packaged_gate_library():
    """DD sequences shipped with the package, with their spin parameters.

    Returns (library dict, SpinSystemParams, fidelity dict)."""
    lib, fids, params = {}, {}, None
    root = importlib.resources.files("spincluster").joinpath("data")
    for name in ("swap", "cz"):
        report, p = deserialize_sequence(
            root.joinpath(f"{name}.ddseq").read_text()
        )
        lib[name] = report.sequence
        fids[name] = report.unitary_fidelity
        params = p
    return lib, params, fids


def ideal_target(
    m: int, n: int, style: str = "pedagogical", init_one: bool = False,
    encoding: str = "polarisation",
) -> QuantumState:
    """Noiseless ideal-gate circuit output after the all-|1> completion;
    the reference state for every fidelity in this module."""
    spec = ProtocolSpec(
        m=m, n=n, gate_library=ideal_library(), photon_encoding=encoding,
        style=style, init_one=init_one,
    )
    sched = build_schedule(spec)
    state = _execute(spec, sched, None)
    vec, p = _spin_branch(state, m, (1,) * m)
    if p < 1e-12:
        raise ValueError("all-|1> completion branch has zero probability")
    wires = tuple(QubitRole(RoleKind.PHOTON, i) for i in range(m * n))
    return QuantumState(vec / np.sqrt(p), wires)


def run(spec: ProtocolSpec, components: bool = False) -> ProtocolResult:
    """Execute the protocol; with noise, average `trials` trajectories into
    a mixed photonic state. Fidelity is against the ideal-gate target."""
    sched = build_schedule(spec)
    compiler = _compiler_for(spec)
    target = ideal_target(
        spec.m, spec.n, spec.style, spec.init_one, spec.photon_encoding
    )
    wall = wall_clock_model(spec)
    corrections = (
        find_corrections(spec) if spec.completion == "corrected" and spec.n > 0
        else None
    )
    if spec.noise is None:
        vec, ps_prob = _complete_pure(
            _execute(spec, sched, compiler), spec, corrections,
            np.random.default_rng(spec.seed),
        )
        if spec.completion == "postselect" and ps_prob > 1e-300:
            vec = vec / np.sqrt(ps_prob)
        photonic = QuantumState(vec, target.wires)
        fid = float(abs(np.vdot(target.data, vec)))
        result_se = 0.0
        rho_state = photonic
        prep_f = block_f = None
        if components:
            prep_f, block_f = component_fidelities(spec)
        return ProtocolResult(
            rho_state, fid, result_se, prep_f, block_f, wall, ps_prob, 1
        )

    if spec.params is None or compiler is None:
        raise ValueError("noisy runs require DD-sequence gates and spin parameters")
    from .noise import segment_phases

    durations = []
    for item in sched:
        if item.kind == "gate" and item.gate in spec.gate_library:
            g = spec.gate_library[item.gate]
            if isinstance(g, DDSequence):
                durations.extend(g.segment_durations())
    rng = np.random.default_rng(spec.seed)
    phases = segment_phases(spec.noise, np.array(durations), spec.trials, rng)

    dim = 2 ** (spec.m * spec.n)
    rho = np.zeros((dim, dim), dtype=complex)
    overlaps = np.empty(spec.trials)
    ps_weight = 0.0
    for t in range(spec.trials):
        state = _execute(spec, sched, compiler, phases[t])
        vec, w = _complete_pure(state, spec, corrections, rng)
        if spec.completion == "postselect":
            ps_weight += w
            rho += np.outer(vec, vec.conj())
            overlaps[t] = w  # weight; overlap folded in below
        else:
            rho += np.outer(vec, vec.conj())
            overlaps[t] = abs(np.vdot(target.data, vec)) ** 2
    if spec.completion == "postselect":
        ps_prob = ps_weight / spec.trials
        rho /= max(ps_weight, 1e-300)
    else:
        ps_prob = 1.0
        rho /= spec.trials
    fid = float(
        np.sqrt(max(np.real(np.vdot(target.data, rho @ target.data)), 0.0))
    )
    if spec.completion == "corrected":
        se = float(np.std(overlaps, ddof=1) / np.sqrt(spec.trials))
        se = se / (2 * fid) if fid > 0 else se
    else:
        se = float("nan")
    photonic = QuantumState(rho, target.wires)
    prep_f = block_f = None
    if components:
        prep_f, block_f = component_fidelities(spec)
    return ProtocolResult(photonic, fid, se, prep_f, block_f, wall, ps_prob, spec.trials)


def _complete_pure(state, spec, corrections, rng):
    """Completion measurement on one pure pre-measurement state.

    corrected mode: sample the spin outcomes, apply the cached local photon
    corrections, return the normalized photonic vector and weight 1.
    postselect mode: project onto all-|1> and return the unnormalized
    branch vector plus its probability."""
    m = spec.m
    if spec.completion == "postselect" or corrections is None:
        vec, p = _spin_branch(state, m, (1,) * m)
        if spec.completion == "postselect":
            return vec, p
        return (vec / np.sqrt(p) if p > 1e-300 else vec), p
    # sample each spin via the Born rule on the joint state
    amp = state.data.reshape((2,) * state.n_qubits)
    bits = []
    for w in range(m):
        sub = amp[tuple(bits)]
        p0 = float(np.sum(np.abs(sub[0]) ** 2))
        norm = float(np.sum(np.abs(sub) ** 2))
        b = 0 if rng.random() * norm < p0 else 1
        bits.append(b)
    bits = tuple(bits)
    vec = np.ascontiguousarray(amp[bits]).ravel()
    vec = vec / np.linalg.norm(vec)
    locals_ = corrections.get(bits)
    if locals_ is None:
        raise RuntimeError(f"sampled a branch with no cached correction: {bits}")
    return _apply_photon_locals(vec, locals_), 1.0


def component_fidelities(spec: ProtocolSpec):
    """(preparation fidelity, single-building-block fidelity), each the
    square-root state fidelity of the noisy output against the ideal one.

    Preparation runs the initialisation block alone; the building block runs
    one column starting from the ideally prepared spin register."""
    prep = _segment_fidelity(spec, prep_only=True)
    block = _segment_fidelity(spec, prep_only=False)
    return prep, block


def _schedule_split(spec):
    sched = [s for s in build_schedule(spec) if s.kind != "measure"]
    n_prep = 0
    for item in sched:
        if item.kind == "gate" and item.gate == "cz":
            break
        n_prep += 1
    return sched[:n_prep], sched[n_prep:]


def _segment_fidelity(spec, prep_only: bool) -> float:
    one_col = ProtocolSpec(
        m=spec.m, n=min(spec.n, 1), gate_library=spec.gate_library,
        photon_encoding=spec.photon_encoding, noise=spec.noise,
        params=spec.params, style=spec.style, init_one=spec.init_one,
        trials=spec.trials, seed=spec.seed + (1 if prep_only else 2),
    )
    prep_sched, block_sched = _schedule_split(one_col)
    sched = prep_sched if prep_only else block_sched
    ideal_twin = _ideal_twin(one_col)
    ref = _run_items(ideal_twin, sched, None, None)
    compiler = _compiler_for(one_col)
    if one_col.noise is None:
        out = _run_items(one_col, sched, compiler, None)
        return float(abs(np.vdot(ref.data, out.data)))
    from .noise import segment_phases

    durations = []
    for item in sched:
        if item.kind == "gate" and isinstance(
            one_col.gate_library.get(item.gate), DDSequence
        ):
            durations.extend(one_col.gate_library[item.gate].segment_durations())
    if not durations:
        out = _run_items(one_col, sched, compiler, None)
        return float(abs(np.vdot(ref.data, out.data)))
    rng = np.random.default_rng(one_col.seed)
    phases = segment_phases(one_col.noise, np.array(durations), one_col.trials, rng)
    acc = 0.0
    for t in range(one_col.trials):
        out = _run_items(one_col, sched, compiler, phases[t])
        acc += abs(np.vdot(ref.data, out.data)) ** 2
    return float(np.sqrt(acc / one_col.trials))


def _run_items(spec, items, compiler, phases):
    state = _initial_state(spec)
    cursor = 0
    for item in items:
        if item.kind == "gate":
            u, cursor = _gate_unitary(spec, item, compiler, phases, cursor)
            state = apply_gate(state, u, list(item.wires))
        elif item.kind == "emit":
            state = emit_photon(state, spec.photon_encoding)
    return state


# -------------------------------------------------- local-unitary analysis

@dataclass
class LUReport:
    equivalent: bool
    overlap: float
    residual: float
    local_unitaries: list


def _local_spectra(vec: np.ndarray):
    n = int(np.log2(len(vec)))
    state = QuantumState(vec, tuple(QubitRole(RoleKind.PHOTON, i) for i in range(n)))
    out = []
    for i in range(n):
        red = partial_trace(state, [i])
        out.append(np.sort(np.linalg.eigvalsh(red.data)))
    return out


def _max_local_overlap(psi1, psi2, rng, n_starts=8, iters=300, tol=1e-13):
    """Maximize |<psi2| (x)_i U_i |psi1>| over single-qubit unitaries by
    alternating per-qubit SVD updates; returns (best overlap, locals)."""
    n = int(np.log2(len(psi1)))
    t2c = psi2.conj().reshape((2,) * n)
    best = (0.0, [I2] * n)
    for s in range(n_starts):
        if s == 0:
            locals_ = [np.eye(2, dtype=complex) for _ in range(n)]
        else:
            locals_ = [_random_unitary(rng) for _ in range(n)]
        prev = 0.0
        for _ in range(iters):
            for i in range(n):
                phi = psi1.reshape((2,) * n)
                for j, u in enumerate(locals_):
                    if j != i:
                        phi = np.moveaxis(
                            np.tensordot(u, phi, axes=([1], [j])), 0, j
                        )
                axes = [j for j in range(n) if j != i]
                env = np.tensordot(t2c, phi, axes=(axes, axes))
                w, _, vh = np.linalg.svd(env.T)
                locals_[i] = (w @ vh).conj().T.copy()
            # overlap after this sweep
            phi = psi1.reshape((2,) * n)
            for j, u in enumerate(locals_):
                phi = np.moveaxis(np.tensordot(u, phi, axes=([1], [j])), 0, j)
            ov = abs(np.vdot(psi2, phi.ravel()))
            if ov - prev < tol:
                break
            prev = ov
        if ov > best[0]:
            best = (ov, [u.copy() for u in locals_])
        if best[0] > 1 - 1e-12:
            break
    return best


def _random_unitary(rng) -> np.ndarray:
    q, r = np.linalg.qr(
        rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    )
    return q * (np.diag(r) / np.abs(np.diag(r)))


def lu_equivalence(psi1: QuantumState, psi2: QuantumState, seed: int = 0) -> LUReport:
    """Numerical local-unitary equivalence of two pure states (<= 6 qubits).

    Prefilter: all single-qubit reduced spectra must match within 1e-9;
    then the local overlap is maximized from multiple starts."""
    if psi1.n_qubits != psi2.n_qubits:
        raise ValueError("qubit counts differ")
    if psi1.n_qubits > 6:
        raise ValueError("local-unitary search limited to 6 qubits")
    v1, v2 = psi1.data, psi2.data
    for s1, s2 in zip(_local_spectra(v1), _local_spectra(v2)):
        if np.max(np.abs(s1 - s2)) > 1e-9:
            return LUReport(False, 0.0, 1.0, [])
    rng = np.random.default_rng(seed)
    overlap, locals_ = _max_local_overlap(v1, v2, rng)
    return LUReport(overlap > 1 - 1e-6, float(overlap), float(1 - overlap), locals_)


def linear_graph_state(n: int) -> QuantumState:
    """|+>^n with CZ on every neighboring pair."""
    vec = np.full(2 ** n, 2 ** (-n / 2), dtype=complex)
    wires = tuple(QubitRole(RoleKind.PHOTON, i) for i in range(n))
    state = QuantumState(vec, wires)
    for i in range(n - 1):
        state = apply_gate(state, CZ, [i, i + 1])
    return state


@dataclass
class AppendixReport:
    steps: list  # (label, QuantumState)
    all_ones_probability: float
    overlap: float
    equivalent: bool

    def amplitude_table(self) -> str:
        lines = []
        for label, state in self.steps:
            lines.append(f"== {label} ==")
            amp = state.data
            n = state.n_qubits
            for idx in np.argsort(-np.abs(amp)):
                a = amp[idx]
                if abs(a) < 1e-9:
                    continue
                bits = format(idx, f"0{n}b")
                ket = "".join(
                    PHOTON_LABELS[int(b)] if w.kind == RoleKind.PHOTON else b
                    for b, w in zip(bits, state.wires)
                )
                lines.append(f"  |{ket}>  {a.real:+.4f}{a.imag:+.4f}j")
        return "\n".join(lines)


def verify_appendix_a() -> AppendixReport:
    """Step-by-step M=3, N=1 run with ideal gates from all-|1>, checking the
    completed photonic state is locally equivalent to the linear 3-qubit
    graph state."""
    spec = ProtocolSpec(
        m=3, n=1, gate_library=ideal_library(), style="pedagogical",
        init_one=True,
    )
    sched = build_schedule(spec)
    steps = []
    state = _initial_state(spec)
    steps.append(("init", state))
    for item in sched:
        if item.kind == "measure":
            continue
        if item.kind == "gate":
            u = spec.gate_library.get(item.gate, RY_PROTO)
            state = apply_gate(state, u, list(item.wires))
        else:
            state = emit_photon(state, spec.photon_encoding)
        steps.append((item.label(), state))
    vec, p = _spin_branch(state, 3, (1, 1, 1))
    photonic = QuantumState(
        vec / np.sqrt(p), tuple(QubitRole(RoleKind.PHOTON, i) for i in range(3))
    )
    steps.append(("completion", photonic))
    rep = lu_equivalence(photonic, linear_graph_state(3))
    return AppendixReport(steps, float(p), rep.overlap, rep.equivalent)
