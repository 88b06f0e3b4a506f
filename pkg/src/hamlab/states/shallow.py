"""Constant-depth circuit states evaluated through backward lightcones."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..circuits import Circuit, Gate, gate_matrix
from ..dense import STATEVECTOR_CAP, apply_gate_matrix, run_circuit, zero_state
from ..errors import SizeError, UnsupportedObservable, ValidationError
from ..hamiltonian import LocalTerm, expand_on_support
from .base import EvaluatableState, observable_matrix, product_on_union

LIGHTCONE_CAP = 12


def _pack_layers(n: int, gates: Sequence[Gate]) -> list[list[Gate]]:
    """Greedy layering: each gate lands in the earliest layer with its qubits free."""
    layers: list[list[Gate]] = []
    busy_until = [0] * n
    for g in gates:
        if len(g.qubits) > 2:
            raise ValidationError(f"gate {g.name} acts on {len(g.qubits)} qubits; cap is 2")
        start = max(busy_until[q] for q in g.qubits)
        while len(layers) <= start:
            layers.append([])
        layers[start].append(g)
        for q in g.qubits:
            busy_until[q] = start + 1
    return layers


class ProductCircuitState(EvaluatableState):
    def __init__(self, n: int, gates: Sequence[Gate]):
        if n < 1:
            raise ValidationError("need at least one qubit")
        self._n = n
        self.circuit = Circuit(n, tuple(gates))
        self.layers = _pack_layers(n, self.circuit.gates)

    @property
    def n(self) -> int:
        return self._n

    @property
    def depth(self) -> int:
        return len(self.layers)

    def description(self) -> str:
        return f"depth-{self.depth} circuit state, n={self._n}"

    def lightcone(self, support: Sequence[int]) -> tuple[list[int], list[Gate]]:
        """Qubits feeding the support, plus the gates that matter, in order."""
        region = set(support)
        kept_rev: list[Gate] = []
        for layer in reversed(self.layers):
            for g in layer:
                if region.intersection(g.qubits):
                    region.update(g.qubits)
                    kept_rev.append(g)
        if len(region) > LIGHTCONE_CAP:
            raise UnsupportedObservable(
                f"lightcone of {sorted(support)} spans {len(region)} qubits; cap is {LIGHTCONE_CAP}"
            )
        return sorted(region), list(reversed(kept_rev))

    def _restricted_value(self, support: list[int], mat: np.ndarray) -> complex:
        cone, kept = self.lightcone(support)
        pos = {q: i for i, q in enumerate(cone)}
        m = len(cone)
        psi = zero_state(m)
        for g in kept:
            psi = apply_gate_matrix(psi, gate_matrix(g), [pos[q] for q in g.qubits], m)
        emb = expand_on_support(mat, [pos[q] for q in support], list(range(m)))
        return complex(np.vdot(psi, emb @ psi))

    def expectation(self, obs: LocalTerm) -> float:
        self._check_support(obs)
        val = self._restricted_value(list(obs.support), observable_matrix(obs))
        return float(val.real)

    def expectation_bilinear(self, ops: Sequence[LocalTerm]) -> complex:
        union, mat = product_on_union(ops, self.support_cap)
        if union and union[-1] >= self._n:
            raise ValidationError(f"support {union} outside [0,{self._n})")
        return self._restricted_value(union, mat)

    def statevector(self) -> np.ndarray:
        if self._n > STATEVECTOR_CAP:
            raise SizeError(f"n={self._n} exceeds dense cap {STATEVECTOR_CAP}")
        return run_circuit(self.circuit)

    def prepare_circuit(self, eta: float = 0.0) -> Circuit:
        return self.circuit

    def to_payload(self) -> dict:
        return {
            "gates": [
                {"name": g.name, "qubits": list(g.qubits), "params": list(g.params)}
                for g in self.circuit.gates
            ]
        }

    @classmethod
    def from_payload(cls, n: int, payload: dict) -> "ProductCircuitState":
        gates = [
            Gate(g["name"], tuple(g["qubits"]), tuple(g.get("params", ())))
            for g in payload["gates"]
        ]
        return cls(n, gates)
