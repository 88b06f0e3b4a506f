"""IQP states: X-basis-diagonal circuits with a sampled expectation estimator."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from ..dense import STATEVECTOR_CAP
from ..errors import SizeError, ValidationError
from ..hamiltonian import LocalTerm
from .base import EvaluatableState, observable_matrix

_H1 = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)


def _hadamard_all(v: np.ndarray, n: int) -> np.ndarray:
    out = v.reshape([2] * n)
    for q in range(n):
        out = np.tensordot(_H1, out, axes=(1, q))
        out = np.moveaxis(out, 0, q)
    return out.reshape(-1)


class IqpState(EvaluatableState):
    """u = H^n diag(e^{i f(x)}) H^n |0^n> with f a sum of monomial phases.

    phases: list of (qubit tuple, theta); f(x) = sum theta * prod_{q} x_q.
    The exact expectation path runs at laboratory sizes; iqp_estimate is the
    budgeted sampling route with the 2/3 success contract.
    """

    def __init__(self, n: int, phases: Sequence[tuple[Sequence[int], float]]):
        if n < 1:
            raise ValidationError("need at least one qubit")
        self._n = n
        cleaned = []
        for qubits, theta in phases:
            qs = tuple(sorted(int(q) for q in qubits))
            if len(set(qs)) != len(qs):
                raise ValidationError(f"repeated qubits in phase term {qs}")
            if qs and (qs[0] < 0 or qs[-1] >= n):
                raise ValidationError(f"phase term {qs} out of range")
            cleaned.append((qs, float(theta)))
        self.phases = tuple(cleaned)

    @property
    def n(self) -> int:
        return self._n

    def description(self) -> str:
        return f"IQP state, n={self._n}, {len(self.phases)} phase terms"

    def _f_values(self, fixed: dict[int, int], free: Sequence[int]) -> np.ndarray:
        """f over all assignments of the free qubits (others pinned)."""
        k = len(free)
        vals = np.zeros(2**k)
        pos = {q: i for i, q in enumerate(free)}
        for qs, theta in self.phases:
            mask = 0
            ok = True
            for q in qs:
                if q in pos:
                    mask |= 1 << (k - 1 - pos[q])
                elif fixed[q] == 0:
                    ok = False
                    break
            if not ok:
                continue
            idx = np.arange(2**k)
            hit = (idx & mask) == mask
            vals[hit] += theta
        return vals

    def statevector(self) -> np.ndarray:
        if self._n > STATEVECTOR_CAP:
            raise SizeError(f"n={self._n} exceeds dense cap {STATEVECTOR_CAP}")
        n = self._n
        f = self._f_values({}, list(range(n)))
        v = np.exp(1j * f) / math.sqrt(2.0**n)
        return _hadamard_all(v, n)

    def expectation(self, obs: LocalTerm) -> float:
        self._check_support(obs)
        psi = self.statevector()
        from ..hamiltonian import embed_matrix

        emb = embed_matrix(observable_matrix(obs), list(obs.support), self._n)
        return float(np.vdot(psi, emb @ psi).real)

    def estimate(self, obs: LocalTerm, eps: float, rng: np.random.Generator) -> float:
        """Monte-Carlo estimate within eps with probability >= 2/3."""
        self._check_support(obs)
        if eps <= 0:
            raise ValidationError("eps must be positive")
        support = list(obs.support)
        k = len(support)
        outside = [q for q in range(self._n) if q not in support]
        o_loc = observable_matrix(obs)
        h_k = np.array([[1.0]])
        for _ in range(k):
            h_k = np.kron(h_k, _H1)
        o_conj = h_k @ o_loc @ h_k
        s = max(int(math.ceil(6.0 / eps**2)), 1)
        total = 0.0
        for _ in range(s):
            fixed = {q: int(rng.integers(2)) for q in outside}
            f = self._f_values(fixed, support)
            v = np.exp(1j * f)
            x = np.vdot(v, o_conj @ v).real / 2**k
            total += x
        return float(total / s)

    def to_payload(self) -> dict:
        return {
            "phases": [
                {"qubits": list(qs), "theta": th} for qs, th in self.phases
            ]
        }

    @classmethod
    def from_payload(cls, n: int, payload: dict) -> "IqpState":
        return cls(
            n,
            [(tuple(p["qubits"]), float(p["theta"])) for p in payload["phases"]],
        )


def iqp_estimate(state: IqpState, obs: LocalTerm, eps: float, rng: np.random.Generator) -> float:
    return state.estimate(obs, eps, rng)
