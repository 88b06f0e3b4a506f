"""Shared builders for the test suite: random instances with controlled norms."""

import numpy as np

from hamlab.circuits import Gate
from hamlab.hamiltonian import LocalHamiltonian, LocalTerm


def rand_hermitian(dim: int, rng: np.random.Generator, norm: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = 0.5 * (a + a.conj().T)
    top = np.max(np.abs(np.linalg.eigvalsh(h)))
    return h * (norm / top) if top > 0 else h


def rand_support(n: int, k: int, rng: np.random.Generator) -> tuple[int, ...]:
    return tuple(sorted(rng.choice(n, size=k, replace=False).tolist()))


def rand_term(n: int, kmax: int, rng: np.random.Generator, weight: float = 1.0) -> LocalTerm:
    k = int(rng.integers(1, kmax + 1))
    sup = rand_support(n, k, rng)
    return LocalTerm(support=sup, weight=weight, matrix=rand_hermitian(2**k, rng))


def rand_local_ham(
    n: int, m: int, kmax: int, rng: np.random.Generator, weight_total: float = 1.0
) -> LocalHamiltonian:
    """Random local Hamiltonian; triangle bound gives norm <= weight_total."""
    raw = rng.random(m) + 0.1
    weights = weight_total * raw / raw.sum()
    terms = [rand_term(n, kmax, rng, weight=float(w)) for w in weights]
    return LocalHamiltonian(n, terms)


def rand_diag_ham(n: int, m: int, kmax: int, rng: np.random.Generator) -> LocalHamiltonian:
    raw = rng.random(m) + 0.1
    weights = raw / raw.sum()
    terms = []
    for w in weights:
        k = int(rng.integers(1, kmax + 1))
        sup = rand_support(n, k, rng)
        d = rng.uniform(-1.0, 1.0, size=2**k)
        terms.append(LocalTerm(support=sup, weight=float(w), matrix=np.diag(d).astype(complex)))
    return LocalHamiltonian(n, terms)


def rand_unit_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


ROTS = ("rx", "ry", "rz")
CLIFF_PLUS_T = ("h", "x", "y", "z", "s", "t", "cnot")


def rand_circuit_gates(n: int, count: int, rng: np.random.Generator) -> list[Gate]:
    """Mix of fixed gates and rotations on random qubits."""
    gates = []
    for _ in range(count):
        roll = rng.random()
        if roll < 0.3 and n >= 2:
            a, b = rng.choice(n, size=2, replace=False)
            gates.append(Gate("cnot", (int(a), int(b))))
        elif roll < 0.6:
            gates.append(Gate(str(rng.choice(ROTS)), (int(rng.integers(n)),), (float(rng.uniform(-3, 3)),)))
        else:
            name = str(rng.choice(("h", "x", "t", "s", "z")))
            gates.append(Gate(name, (int(rng.integers(n)),)))
    return gates
