"""Stabilizer backend: exact Pauli expectations, sampling, serialization."""

import numpy as np
import pytest

from hamlab.circuits import Gate
from hamlab.errors import UnknownGate, ValidationError
from hamlab.hamiltonian import LocalTerm, pauli_term
from hamlab.states import StabilizerState, random_clifford_gates, state_from_json, state_to_json

PAULI = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def bell():
    return StabilizerState(2, (Gate("h", (0,)), Gate("cnot", (0, 1))))


def ghz(n):
    gates = [Gate("h", (0,))] + [Gate("cnot", (k, k + 1)) for k in range(n - 1)]
    return StabilizerState(n, gates)


def test_zero_state_expectations():
    s = StabilizerState(3)
    assert s.pauli_expectation("z", (0,)) == 1
    assert s.pauli_expectation("z", (2,)) == 1
    assert s.pauli_expectation("x", (1,)) == 0
    assert s.pauli_expectation("zz", (0, 2)) == 1


def test_bell_expectations_exact():
    s = bell()
    assert s.pauli_expectation("xx", (0, 1)) == 1
    assert s.pauli_expectation("zz", (0, 1)) == 1
    assert s.pauli_expectation("yy", (0, 1)) == -1
    assert s.pauli_expectation("z", (0,)) == 0
    assert s.pauli_expectation("x", (0,)) == 0


def test_ghz_expectations():
    s = ghz(4)
    assert s.pauli_expectation("xxxx", (0, 1, 2, 3)) == 1
    assert s.pauli_expectation("zz", (0, 3)) == 1
    assert s.pauli_expectation("z", (1,)) == 0
    assert s.pauli_expectation("zzz", (0, 1, 2)) == 0


def test_expectation_values_in_allowed_set():
    rng = np.random.default_rng(3)
    for _ in range(30):
        n = int(rng.integers(2, 6))
        s = StabilizerState(n, random_clifford_gates(n, rng))
        sup = tuple(sorted(rng.choice(n, size=2, replace=False).tolist()))
        letters = "".join(rng.choice(list("ixyz"), size=2).tolist())
        v = s.pauli_expectation(letters, sup)
        assert v in (-1, 0, 1)


def test_expectation_matches_dense():
    rng = np.random.default_rng(7)
    for trial in range(25):
        n = int(rng.integers(2, 7))
        s = StabilizerState(n, random_clifford_gates(n, rng))
        psi = s.statevector()
        k = int(rng.integers(1, min(3, n) + 1))
        sup = tuple(sorted(rng.choice(n, size=k, replace=False).tolist()))
        letters = "".join(rng.choice(list("xyz"), size=k).tolist())
        term = pauli_term(letters, sup, weight=0.7)
        mat = PAULI[letters[0]]
        for c in letters[1:]:
            mat = np.kron(mat, PAULI[c])
        full = np.eye(1, dtype=complex)
        pos = 0
        for q in range(n):
            if q in sup:
                full = np.kron(full, PAULI[letters[sup.index(q)]])
            else:
                full = np.kron(full, PAULI["i"])
        want = 0.7 * np.vdot(psi, full @ psi).real
        assert abs(s.expectation(term) - want) < 1e-9, f"trial {trial}"


def test_nonpauli_observable_via_decomposition():
    # arbitrary Hermitian observables decompose into Pauli strings internally
    rng = np.random.default_rng(11)
    s = StabilizerState(3, random_clifford_gates(3, rng))
    psi = s.statevector()
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    m = m + m.conj().T
    m /= max(np.abs(np.linalg.eigvalsh(m)))
    term = LocalTerm(support=(0, 2), weight=0.5, matrix=m)
    # embed m on qubits (0, 2) by hand
    big = np.zeros((8, 8), dtype=complex)
    for a in range(2):
        for b in range(2):
            for c in range(2):
                for a2 in range(2):
                    for b2 in range(2):
                        for c2 in range(2):
                            if b != b2:
                                continue
                            big[a * 4 + b * 2 + c, a2 * 4 + b2 * 2 + c2] = m[a * 2 + c, a2 * 2 + c2]
    want = 0.5 * np.vdot(psi, big @ psi).real
    assert abs(s.expectation(term) - want) < 1e-9


def test_bilinear_matches_dense():
    rng = np.random.default_rng(13)
    s = StabilizerState(4, random_clifford_gates(4, rng))
    psi = s.statevector()
    t1 = pauli_term("xz", (0, 2), weight=1.0)
    t2 = pauli_term("y", (1,), weight=1.0)
    got = s.expectation_bilinear([t1, t2])
    x = PAULI["x"]
    y = PAULI["y"]
    z = PAULI["z"]
    i2 = PAULI["i"]
    m1 = np.kron(np.kron(np.kron(x, i2), z), i2)
    m2 = np.kron(np.kron(np.kron(i2, y), i2), i2)
    want = np.vdot(psi, m1 @ m2 @ psi)
    assert abs(got - want) < 1e-9


def test_sample_zero_state_all_zeros():
    s = StabilizerState(4)
    rng = np.random.default_rng(0)
    for _ in range(50):
        assert s.sample(rng) == 0


def test_sample_bell_balanced():
    s = bell()
    rng = np.random.default_rng(5)
    draws = [s.sample(rng) for _ in range(4000)]
    assert set(draws) <= {0, 3}
    frac = draws.count(0) / len(draws)
    assert abs(frac - 0.5) < 0.02


def test_sample_matches_born_rule():
    rng = np.random.default_rng(17)
    s = StabilizerState(3, random_clifford_gates(3, rng))
    probs = np.abs(s.statevector()) ** 2
    counts = np.zeros(8)
    ndraw = 20000
    for _ in range(ndraw):
        counts[s.sample(rng)] += 1
    tv = 0.5 * np.sum(np.abs(counts / ndraw - probs))
    assert tv < 0.03


def test_amplitude_matches_statevector():
    rng = np.random.default_rng(23)
    for _ in range(10):
        n = int(rng.integers(2, 6))
        s = StabilizerState(n, random_clifford_gates(n, rng))
        psi = s.statevector()
        # global phase of statevector() is pinned to the amplitude walk
        for i in range(2**n):
            assert abs(s.amplitude(i) - psi[i]) < 1e-12


def test_random_clifford_gates_normalized_state():
    rng = np.random.default_rng(29)
    s = StabilizerState(5, random_clifford_gates(5, rng, length=60))
    psi = s.statevector()
    assert abs(np.linalg.norm(psi) - 1.0) < 1e-10


def test_rotation_gate_rejected():
    with pytest.raises((UnknownGate, ValidationError)):
        StabilizerState(2, (Gate("rx", (0,), (0.3,)),))


def test_serialization_roundtrip():
    s = ghz(3)
    back = state_from_json(state_to_json(s))
    assert isinstance(back, StabilizerState)
    a = s.statevector()
    b = back.statevector()
    assert abs(abs(np.vdot(a, b)) - 1.0) < 1e-12
