"""Gate-level simulator for polarization qubits.

Basis |V> = |0>, |H> = |1>.  Amplitude index i = sum_k b_k 2^k (little-endian:
qubit k is bit k).  Two-qubit gate matrices are written in the ordering
|b_j b_k> = |VV>, |VH>, |HV>, |HH> for the qubit pair (j, k) as listed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import detector as det
from . import qmemory, xpm

MAX_QUBITS = 20
NORM_TOL = 1e-9
BASIS_NOTE = "# basis |V>=0 |H>=1; amplitude index = sum_k b_k 2^k (qubit k is bit k)"


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


def phase(phi: float) -> np.ndarray:
    return np.array([[1, 0], [0, np.exp(1j * phi)]], dtype=complex)


CANONICAL = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2),
}


def pauli_and_hadamard() -> dict[str, np.ndarray]:
    """X = R(pi/2) T(pi), Y = e^{i pi/2} R(pi/2), Z = T(pi), H = R(pi/4) T(pi)."""
    gates = {
        "X": rotation(math.pi / 2) @ phase(math.pi),
        "Y": np.exp(0.5j * math.pi) * rotation(math.pi / 2),
        "Z": phase(math.pi),
        "H": rotation(math.pi / 4) @ phase(math.pi),
    }
    for name, g in gates.items():
        if not np.allclose(g, CANONICAL[name], rtol=0, atol=1e-15):
            raise AssertionError(f"decomposition of {name} does not reproduce the canonical matrix")
    return gates


def cz_gate(phi: float = math.pi) -> np.ndarray:
    """diag(1, 1, 1, e^{i phi}): only the |HH> branch goes through the medium."""
    return np.diag([1, 1, 1, np.exp(1j * phi)]).astype(complex)


def cnot() -> np.ndarray:
    return np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


@dataclass(frozen=True)
class CircuitState:
    amplitudes: np.ndarray
    n_qubits: int
    record: tuple = ()
    success_prob: float = 1.0

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ValueError(f"n_qubits must be in 1..{MAX_QUBITS}")
        a = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "amplitudes", a)
        if a.shape != (2**self.n_qubits,):
            raise ValueError(f"need {2**self.n_qubits} amplitudes, got shape {a.shape}")
        n = float(np.sum(np.abs(a) ** 2))
        if abs(n - 1) > NORM_TOL:
            raise ValueError(f"state not normalized: {n!r}")

    @classmethod
    def zero(cls, n_qubits: int) -> "CircuitState":
        """|V...V>."""
        if not 1 <= n_qubits <= MAX_QUBITS:
            raise ValueError(f"n_qubits must be in 1..{MAX_QUBITS}")
        a = np.zeros(2**n_qubits, dtype=complex)
        a[0] = 1
        return cls(a, n_qubits)

    @classmethod
    def from_qubits(cls, qubits) -> "CircuitState":
        """Product state; qubits[k] is a PolarizationQubit or a 2-vector for qubit k."""
        a = np.ones(1, dtype=complex)
        for q in qubits:
            v = q.vector if hasattr(q, "vector") else np.asarray(q, dtype=complex)
            a = np.kron(v, a)  # qubit k becomes bit k
        return cls(a, len(qubits))

    def probability(self, qubit: int, value: int) -> float:
        t = self._tensor()
        ax = self.n_qubits - 1 - qubit
        return float(np.sum(np.abs(np.take(t, value, axis=ax)) ** 2))

    def _tensor(self):
        return self.amplitudes.reshape((2,) * self.n_qubits)


def _axis(state: CircuitState, k: int) -> int:
    if not 0 <= k < state.n_qubits:
        raise IndexError(f"qubit {k} out of range for {state.n_qubits} qubits")
    return state.n_qubits - 1 - k


def apply(state: CircuitState, gate, qubits) -> CircuitState:
    gate = np.asarray(gate, dtype=complex)
    qubits = [qubits] if np.isscalar(qubits) else list(qubits)
    m = len(qubits)
    if gate.shape != (2**m, 2**m):
        raise ValueError(f"gate shape {gate.shape} does not act on {m} qubit(s)")
    if len(set(qubits)) != m:
        raise ValueError("repeated qubit index")
    axes = [_axis(state, k) for k in qubits]
    t = np.tensordot(gate.reshape((2,) * (2 * m)), state._tensor(), axes=(list(range(m, 2 * m)), axes))
    t = np.moveaxis(t, list(range(m)), axes)
    return replace(state, amplitudes=t.reshape(-1))


def global_phase(state: CircuitState, phi: float) -> CircuitState:
    return replace(state, amplitudes=state.amplitudes * np.exp(1j * phi))


def memory_delay(state: CircuitState, qubit: int, t: float, gamma_R: float) -> CircuitState:
    """Hold one qubit in the memory for ``t``: common-mode decay only lowers the success probability."""
    _axis(state, qubit)
    stored = qmemory.hold(qmemory.store_qubit(qmemory.PolarizationQubit(1, 0), 0.0, gamma_R), t)
    return replace(state, success_prob=state.success_prob * stored.norm_remaining)


def measure(state: CircuitState, qubit: int, rng, detector: det.DetectorParams | None = None) -> CircuitState:
    """Projective V/H measurement of one qubit; with a detector the branch may not click ("none").

    The state collapses onto the branch the photon took either way; the
    detector's click probability multiplies ``success_prob``.
    """
    ax = _axis(state, qubit)
    p0 = state.probability(qubit, 0)
    value = 0 if rng.random() < p0 else 1
    outcome = "V" if value == 0 else "H"
    success = state.success_prob
    if detector is not None:
        if not det.click(detector, True, rng):
            outcome = "none"
        success *= det.click_probability(detector)
    t = state._tensor().copy()
    idx = [slice(None)] * state.n_qubits
    idx[ax] = 1 - value
    t[tuple(idx)] = 0
    t /= math.sqrt(p0 if value == 0 else 1 - p0)
    return CircuitState(t.reshape(-1), state.n_qubits, state.record + ((qubit, outcome),), success)


def sample_outcomes(state: CircuitState, qubit: int, trials: int, rng, detector=None) -> np.ndarray:
    """Outcomes of ``trials`` fresh measurements of ``state``; same draws as repeated measure() calls."""
    p0 = state.probability(qubit, 0)
    u = rng.random((trials, 1 if detector is None else 2))
    out = np.where(u[:, 0] < p0, "V", "H").astype(object)
    if detector is not None:
        out[u[:, 1] >= det.click_probability(detector)] = "none"
    return out


def reduced_purity(state: CircuitState, qubit: int) -> float:
    ax = _axis(state, qubit)
    t = np.moveaxis(state._tensor(), ax, 0).reshape(2, -1)
    rho = t @ t.conj().T
    return float(np.real(np.trace(rho @ rho)))


# --- programs -----------------------------------------------------------------


@dataclass(frozen=True)
class Instruction:
    op: str
    qubits: tuple
    value: float | str | None = None
    extra: float | None = None


OPS = {"R": 1, "T": 1, "G": 0, "CZ": 2, "M": 1, "DELAY": 1}


@dataclass
class GateProgram:
    instructions: list[Instruction] = field(default_factory=list)

    @classmethod
    def parse(cls, text: str) -> "GateProgram":
        """One instruction per line: R k theta, T k phi, G phi, CZ j k [phi|auto], M k, DELAY k t gamma_R."""
        prog = cls()
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            op = parts[0].upper()
            if op not in OPS:
                raise ValueError(f"line {lineno}: unknown instruction {parts[0]!r}")
            nq = OPS[op]
            try:
                qubits = tuple(int(v) for v in parts[1 : 1 + nq])
                rest = parts[1 + nq :]
                if len(qubits) != nq:
                    raise ValueError("missing qubit index")
                if op in ("R", "T", "G"):
                    if len(rest) != 1:
                        raise ValueError("expected one angle")
                    prog.instructions.append(Instruction(op, qubits, float(rest[0])))
                elif op == "CZ":
                    if len(rest) > 1:
                        raise ValueError("too many fields")
                    val = rest[0] if rest else math.pi
                    val = "auto" if val == "auto" else float(val)
                    prog.instructions.append(Instruction(op, qubits, val))
                elif op == "M":
                    if rest:
                        raise ValueError("too many fields")
                    prog.instructions.append(Instruction(op, qubits))
                else:
                    if len(rest) != 2:
                        raise ValueError("expected hold time and gamma_R")
                    prog.instructions.append(Instruction(op, qubits, float(rest[0]), float(rest[1])))
            except ValueError as e:
                raise ValueError(f"line {lineno}: {e}") from None
        return prog

    @classmethod
    def load(cls, path) -> "GateProgram":
        with open(path) as fh:
            return cls.parse(fh.read())

    def n_qubits(self) -> int:
        return 1 + max((k for ins in self.instructions for k in ins.qubits), default=0)

    def measured(self) -> list[int]:
        return [ins.qubits[0] for ins in self.instructions if ins.op == "M"]

    def validate(self, n_qubits: int, tripod: xpm.TripodParams | None = None) -> None:
        for ins in self.instructions:
            for k in ins.qubits:
                if not 0 <= k < n_qubits:
                    raise IndexError(f"{ins.op}: qubit {k} out of range for {n_qubits} qubits")
            if ins.op == "CZ":
                if ins.qubits[0] == ins.qubits[1]:
                    raise ValueError("CZ needs two distinct qubits")
                if ins.value == "auto" and tripod is None:
                    raise ValueError("CZ auto needs tripod medium parameters")


def resolve_cz_phase(value, tripod: xpm.TripodParams | None, tol: float = xpm.PHASE_TOL) -> float:
    if value == "auto":
        if tripod is None:
            raise ValueError("CZ auto needs tripod medium parameters")
        return xpm.cz_phase(tripod, tol)
    return float(value)


def run(program: GateProgram, initial: CircuitState | int, rng=None, *, detector=None, tripod=None,
        tol: float = xpm.PHASE_TOL) -> tuple[CircuitState, tuple]:
    state = CircuitState.zero(initial) if isinstance(initial, int) else initial
    program.validate(state.n_qubits, tripod)
    if rng is None:
        rng = np.random.default_rng()
    for ins in program.instructions:
        if ins.op == "R":
            state = apply(state, rotation(ins.value), ins.qubits)
        elif ins.op == "T":
            state = apply(state, phase(ins.value), ins.qubits)
        elif ins.op == "G":
            state = global_phase(state, ins.value)
        elif ins.op == "CZ":
            state = apply(state, cz_gate(resolve_cz_phase(ins.value, tripod, tol)), ins.qubits)
        elif ins.op == "DELAY":
            state = memory_delay(state, ins.qubits[0], ins.value, ins.extra)
        else:
            state = measure(state, ins.qubits[0], rng, detector)
    return state, state.record


def run_trials(program: GateProgram, n_qubits: int, trials: int, seed: int = 0, **kw) -> list[list]:
    """Rows ``[trial, outcomes..., success_prob]``; trial i uses the i-th spawned seed stream."""
    seeds = np.random.SeedSequence(seed).spawn(trials)
    rows = []
    for i, s in enumerate(seeds):
        st, rec = run(program, n_qubits, np.random.default_rng(s), **kw)
        rows.append([i, *(o for _, o in rec), st.success_prob])
    return rows


def write_results(path, program: GateProgram, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(BASIS_NOTE + "\n")
        w = csv.writer(fh)
        w.writerow(["trial", *(f"m{k}" for k in program.measured()), "success_prob"])
        w.writerows(rows)
