import csv
import math

import numpy as np
import pytest

from eitqc import circuit as cq
from eitqc import detector as det
from eitqc import xpm
from eitqc.qmemory import PolarizationQubit

G = cq.pauli_and_hadamard()
S2 = 1 / math.sqrt(2)


def _unitary(u, tol=1e-12):
    return np.allclose(u.conj().T @ u, np.eye(len(u)), rtol=0, atol=tol)


def test_rotation_and_phase_examples():
    np.testing.assert_array_equal(cq.rotation(0), np.eye(2))
    np.testing.assert_array_equal(cq.phase(0), np.eye(2))
    np.testing.assert_allclose(cq.rotation(math.pi / 2), [[0, -1], [1, 0]], atol=1e-16)
    np.testing.assert_allclose(cq.phase(math.pi), np.diag([1, -1]), atol=1e-15)
    for a in np.linspace(-4, 4, 17):
        for u in (cq.rotation(a), cq.phase(a)):
            assert np.max(np.abs(u.conj().T @ u - np.eye(2))) <= 1e-15


def test_decompositions():
    for name, g in G.items():
        assert np.max(np.abs(g - cq.CANONICAL[name])) <= 1e-15
        assert _unitary(g)


@pytest.mark.parametrize("phi", [0.0, 0.7, math.pi])
def test_cz_gate(phi):
    u = cq.cz_gate(phi)
    assert _unitary(u)
    if phi == 0:
        np.testing.assert_array_equal(u, np.eye(4))
    if phi == math.pi:
        np.testing.assert_allclose(u, np.diag([1, 1, 1, -1]), atol=1e-15)
        np.testing.assert_allclose(u @ u, np.eye(4), atol=1e-15)
        zi = np.kron(G["Z"], np.eye(2))
        np.testing.assert_allclose(u @ zi, zi @ u, atol=1e-15)


def test_cz_from_tuned_medium():
    p = xpm.tripod_example()
    u = cq.cz_gate(cq.resolve_cz_phase("auto", p))
    assert np.max(np.abs(u - cq.cz_gate(math.pi))) < 1e-3
    with pytest.raises(ValueError):
        cq.resolve_cz_phase("auto", xpm.tune_to_pi(p, 3.0))
    with pytest.raises(ValueError):
        cq.resolve_cz_phase("auto", None)


def test_little_endian_layout():
    s = cq.apply(cq.CircuitState.zero(3), G["X"], 1)
    assert s.amplitudes[2] == pytest.approx(1)
    s = cq.CircuitState.from_qubits([PolarizationQubit(0, 1), PolarizationQubit(1, 0)])
    assert s.amplitudes[1] == 1
    # gate ordering follows the listed qubit pair
    s = cq.apply(cq.CircuitState.from_qubits([[0, 1], [1, 0]]), cq.cnot(), (0, 1))
    assert s.amplitudes[3] == pytest.approx(1)
    s = cq.apply(cq.CircuitState.from_qubits([[0, 1], [1, 0]]), cq.cnot(), (1, 0))
    assert s.amplitudes[1] == pytest.approx(1)


def test_hadamard_on_v():
    s = cq.apply(cq.CircuitState.zero(1), G["H"], 0)
    np.testing.assert_allclose(s.amplitudes, [S2, S2])


def test_bell_circuit_via_cz():
    s = cq.CircuitState.zero(2)
    s = cq.apply(s, G["H"], 0)
    s = cq.apply(s, G["H"], 1)
    s = cq.apply(s, cq.cz_gate(math.pi), (0, 1))
    s = cq.apply(s, G["H"], 1)
    ref = cq.apply(cq.apply(cq.CircuitState.zero(2), G["H"], 0), cq.cnot(), (0, 1))
    np.testing.assert_allclose(ref.amplitudes, [S2, 0, 0, S2], atol=1e-15)
    np.testing.assert_allclose(s.amplitudes, ref.amplitudes, atol=1e-12)
    assert cq.reduced_purity(s, 0) == pytest.approx(0.5, abs=1e-12)
    assert cq.reduced_purity(s, 1) == pytest.approx(0.5, abs=1e-12)


def test_cz_equals_conjugated_cnot():
    ih = np.kron(np.eye(2), G["H"])
    np.testing.assert_allclose(cq.cz_gate(math.pi), ih @ cq.cnot() @ ih, atol=1e-15)


def test_program_bell_and_measure():
    prog = cq.GateProgram.parse("""
        # Bell pair from H, CZ, H
        R 0 0.7853981633974483
        T 0 3.141592653589793
        R 1 0.7853981633974483
        T 1 3.141592653589793
        CZ 0 1
        R 1 0.7853981633974483
        T 1 3.141592653589793
        M 0
        M 1
    """)
    rows = cq.run_trials(prog, 2, 20_000, seed=4)
    assert all(r[1] == r[2] for r in rows)
    v = sum(r[1] == "V" for r in rows)
    assert abs(v - 10_000) < 4 * math.sqrt(5_000)


def test_measure_balanced_state_statistics():
    prog = cq.GateProgram.parse("R 0 0.7853981633974483\nT 0 3.141592653589793\nM 0")
    rows = cq.run_trials(prog, 1, 20_000, seed=8)
    v = sum(r[1] == "V" for r in rows)
    assert abs(v - 10_000) < 4 * math.sqrt(5_000)


def test_sample_outcomes_match_measure():
    d = det.shelving_example(quantum_efficiency=2e-4)
    s = cq.apply(cq.CircuitState.zero(2), G["H"], 1)
    for detector in (None, d):
        r1, r2 = np.random.default_rng(6), np.random.default_rng(6)
        fast = cq.sample_outcomes(s, 1, 300, r1, detector)
        slow = [cq.measure(s, 1, r2, detector).record[0][1] for _ in range(300)]
        assert list(fast) == slow


def test_born_statistics_random_states(rng):
    n = 100_000
    for _ in range(20):
        v = rng.normal(size=8) + 1j * rng.normal(size=8)
        s = cq.CircuitState(v / np.linalg.norm(v), 3)
        k = int(rng.integers(3))
        p0 = s.probability(k, 0)
        assert p0 == pytest.approx(sum(abs(v[i]) ** 2 for i in range(8) if not (i >> k) & 1) / np.sum(abs(v) ** 2))
        hits = np.sum(cq.sample_outcomes(s, k, n, rng) == "V")
        assert abs(hits - n * p0) <= 4 * math.sqrt(n * p0 * (1 - p0))


def test_measure_collapses_and_records():
    s = cq.apply(cq.CircuitState.zero(2), G["H"], 0)
    s = cq.apply(s, cq.cnot(), (0, 1))
    m = cq.measure(s, 0, np.random.default_rng(3))
    (q, outcome), = m.record
    assert q == 0
    expected = 0 if outcome == "V" else 3
    assert abs(m.amplitudes[expected]) == pytest.approx(1.0)


def test_measurement_with_detector():
    d = det.shelving_example()
    s = cq.apply(cq.CircuitState.zero(1), G["H"], 0)
    outs = [cq.measure(s, 0, np.random.default_rng(i), d) for i in range(3000)]
    assert all(o.success_prob == pytest.approx(det.click_probability(d)) for o in outs)
    none = sum(o.record[0][1] == "none" for o in outs)
    assert none < 60


def test_memory_delay():
    s = cq.apply(cq.CircuitState.zero(2), G["H"], 0)
    same = cq.memory_delay(s, 1, 0.0, 3.0)
    np.testing.assert_array_equal(same.amplitudes, s.amplitudes)
    assert same.success_prob == 1.0
    d = cq.memory_delay(s, 0, 1 / 3.0, 3.0)
    assert d.success_prob == pytest.approx(math.exp(-2))
    np.testing.assert_array_equal(d.amplitudes, s.amplitudes)
    with pytest.raises(IndexError):
        cq.memory_delay(s, 5, 1.0, 1.0)


def test_random_gates_are_unitary(rng):
    for _ in range(20):
        a, b = rng.uniform(-7, 7, 2)
        assert _unitary(cq.rotation(a) @ cq.phase(b))
        assert _unitary(cq.cz_gate(a))


def test_program_parsing_errors_and_validation():
    with pytest.raises(ValueError, match="line 2"):
        cq.GateProgram.parse("R 0 1\nFOO 1")
    with pytest.raises(ValueError):
        cq.GateProgram.parse("R 0")
    with pytest.raises(ValueError):
        cq.GateProgram.parse("CZ 0 1 2 3")
    prog = cq.GateProgram.parse("CZ 0 3")
    with pytest.raises(IndexError):
        cq.run(prog, 2)
    with pytest.raises(ValueError):
        cq.run(cq.GateProgram.parse("CZ 1 1"), 2)
    with pytest.raises(ValueError, match="auto"):
        cq.run(cq.GateProgram.parse("CZ 0 1 auto"), 2)
    auto, _ = cq.run(cq.GateProgram.parse("CZ 0 1 auto\nDELAY 0 1e-6 1e3\nG 0.5"), 2, tripod=xpm.tripod_example())
    assert auto.success_prob == pytest.approx(math.exp(-2e-3))


def test_qubit_cap():
    with pytest.raises(ValueError):
        cq.CircuitState.zero(21)
    assert cq.CircuitState.zero(cq.MAX_QUBITS).amplitudes.size == 2**20


def test_results_csv(tmp_path):
    prog = cq.GateProgram.parse("M 0\nM 1")
    rows = cq.run_trials(prog, 2, 5, seed=1)
    assert rows == cq.run_trials(prog, 2, 5, seed=1)
    path = tmp_path / "r.csv"
    cq.write_results(path, prog, rows)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# basis")
    table = list(csv.reader(lines[1:]))
    assert table[0] == ["trial", "m0", "m1", "success_prob"]
    assert table[1] == ["0", "V", "V", "1.0"]
