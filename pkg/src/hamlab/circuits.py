"""Gate-list circuit description shared by simulation, states, and reductions.

A gate is (name, qubits, params). Fixed gates carry no params; rotation
gates carry one angle; "phase" applies exp(i*theta) on the all-ones
subspace of its qubits (1 qubit: a phase gate, 2 qubits: controlled
phase, and so on); "unitary1"/"unitary2" carry an explicit matrix as
interleaved re/im floats, row-major.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ParseError, UnknownGate, ValidationError

_SQ = 1.0 / math.sqrt(2.0)

FIXED_GATES = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.diag([1, -1]).astype(complex),
    "h": np.array([[_SQ, _SQ], [_SQ, -_SQ]], dtype=complex),
    "s": np.diag([1, 1j]).astype(complex),
    "sdg": np.diag([1, -1j]).astype(complex),
    "t": np.diag([1, np.exp(1j * math.pi / 4)]).astype(complex),
    "tdg": np.diag([1, np.exp(-1j * math.pi / 4)]).astype(complex),
    "cnot": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
    "cz": np.diag([1, 1, 1, -1]).astype(complex),
    "swap": np.array(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
    ),
    "toffoli": np.eye(8, dtype=complex),
}
FIXED_GATES["toffoli"][6:8, 6:8] = [[0, 1], [1, 0]]
FIXED_GATES["cx"] = FIXED_GATES["cnot"]
FIXED_GATES["ccx"] = FIXED_GATES["toffoli"]

ROTATIONS = {"rx", "ry", "rz"}


@dataclass(frozen=True)
class Gate:
    name: str
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "name", str(self.name).lower())
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if len(set(self.qubits)) != len(self.qubits):
            raise ValidationError(f"gate {self.name} has repeated qubits {self.qubits}")


def _unitary_from_params(params: Sequence[float], nq: int) -> np.ndarray:
    dim = 2**nq
    if len(params) != 2 * dim * dim:
        raise ValidationError(
            f"unitary{nq} expects {2 * dim * dim} params, got {len(params)}"
        )
    arr = np.asarray(params, dtype=float).reshape(dim * dim, 2)
    mat = (arr[:, 0] + 1j * arr[:, 1]).reshape(dim, dim)
    if np.max(np.abs(mat @ mat.conj().T - np.eye(dim))) > 1e-9:
        raise ValidationError(f"unitary{nq} params are not unitary")
    return mat


def gate_matrix(gate: Gate) -> np.ndarray:
    """Dense matrix of the gate on its own qubits (first listed = leftmost factor)."""
    name, nq = gate.name, len(gate.qubits)
    if name in FIXED_GATES:
        mat = FIXED_GATES[name]
        if mat.shape[0] != 2**nq:
            raise ValidationError(f"gate {name} acts on {int(math.log2(mat.shape[0]))} qubits, given {nq}")
        return mat
    if name in ROTATIONS:
        if nq != 1 or len(gate.params) != 1:
            raise ValidationError(f"{name} takes 1 qubit and 1 angle")
        th = gate.params[0]
        c, s = math.cos(th / 2), math.sin(th / 2)
        if name == "rx":
            return np.array([[c, -1j * s], [-1j * s, c]])
        if name == "ry":
            return np.array([[c, -s], [s, c]], dtype=complex)
        return np.diag([np.exp(-1j * th / 2), np.exp(1j * th / 2)])
    if name == "phase":
        if len(gate.params) != 1:
            raise ValidationError("phase takes 1 angle")
        diag = np.ones(2**nq, dtype=complex)
        diag[-1] = np.exp(1j * gate.params[0])
        return np.diag(diag)
    if name == "unitary1":
        if nq != 1:
            raise ValidationError("unitary1 acts on 1 qubit")
        return _unitary_from_params(gate.params, 1)
    if name == "unitary2":
        if nq != 2:
            raise ValidationError("unitary2 acts on 2 qubits")
        return _unitary_from_params(gate.params, 2)
    raise UnknownGate(f"unknown gate {name!r}")


def unitary_gate(mat: np.ndarray, qubits: Sequence[int]) -> Gate:
    """Wrap an explicit 1- or 2-qubit unitary as a Gate."""
    qubits = tuple(qubits)
    dim = 2 ** len(qubits)
    mat = np.asarray(mat, dtype=complex)
    if mat.shape != (dim, dim):
        raise ValidationError(f"matrix shape {mat.shape} does not fit {len(qubits)} qubits")
    params = []
    for z in mat.reshape(-1):
        params.extend((float(z.real), float(z.imag)))
    name = {1: "unitary1", 2: "unitary2"}.get(len(qubits))
    if name is None:
        raise ValidationError("explicit unitaries supported on 1 or 2 qubits only")
    return Gate(name, qubits, tuple(params))


@dataclass(frozen=True)
class Circuit:
    n: int
    gates: tuple[Gate, ...]

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if any(q < 0 or q >= self.n for q in g.qubits):
                raise ValidationError(f"gate {g.name} on {g.qubits} out of range for n={self.n}")

    @property
    def size(self) -> int:
        return len(self.gates)

    def unitary(self) -> np.ndarray:
        """Dense unitary of the whole circuit (small n only)."""
        from .hamiltonian import embed_matrix

        if self.n > 12:
            raise ValidationError("dense circuit unitary capped at 12 qubits")
        u = np.eye(2**self.n, dtype=complex)
        for g in self.gates:
            u = embed_matrix(gate_matrix(g), g.qubits, self.n) @ u
        return u


def gate_to_json(g: Gate) -> dict:
    return {"name": g.name, "qubits": list(g.qubits), "params": list(g.params)}


def gate_from_json(doc: dict) -> Gate:
    try:
        return Gate(doc["name"], tuple(doc["qubits"]), tuple(doc.get("params", ())))
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"gate document: {e}") from e


def circuit_to_json(circ: Circuit, registers: dict | None = None) -> dict:
    doc = {"n": circ.n, "gates": [gate_to_json(g) for g in circ.gates]}
    if registers is not None:
        doc["registers"] = dict(registers)
    return doc


def circuit_from_json(doc: dict) -> tuple[Circuit, dict | None]:
    if not isinstance(doc, dict):
        raise ParseError("circuit document must be an object")
    try:
        n = int(doc["n"])
        raw = doc["gates"]
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"circuit document: {e}") from e
    if not isinstance(raw, list):
        raise ParseError("gates must be a list")
    gates = []
    for i, rg in enumerate(raw):
        try:
            gates.append(gate_from_json(rg))
        except ParseError as e:
            raise ParseError(f"gate {i}: {e}") from e
    regs = doc.get("registers")
    if regs is not None and not isinstance(regs, dict):
        raise ParseError("registers must be an object")
    return Circuit(n, tuple(gates)), regs


def parse_circuit(text: str) -> tuple[Circuit, dict | None]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"not valid JSON: {e}") from e
    return circuit_from_json(doc)
