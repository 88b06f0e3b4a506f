"""Common interface for classically evaluatable guiding-state backends."""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Sequence

import numpy as np

from ..errors import UnsupportedObservable
from ..hamiltonian import LocalTerm

SUPPORT_CAP = 6  # combined observable support a backend must handle


def observable_matrix(obs: LocalTerm) -> np.ndarray:
    """Dense operator of a term on its (sorted) support, weight included."""
    return obs.weight * obs.matrix


def product_on_union(
    ops: Sequence[LocalTerm], cap: int = SUPPORT_CAP
) -> tuple[list[int], np.ndarray]:
    """Union support and the ordered product matrix of the given terms."""
    if not ops:
        raise UnsupportedObservable("empty operator product")
    union = sorted({q for op in ops for q in op.support})
    if len(union) > cap:
        raise UnsupportedObservable(
            f"combined support {len(union)} exceeds backend cap {cap}"
        )
    dim = 2 ** len(union)
    out = np.eye(dim, dtype=complex)
    from ..hamiltonian import expand_on_support

    for op in ops:
        emb = expand_on_support(op.weight * op.matrix, list(op.support), union)
        out = out @ emb
    return union, out


class EvaluatableState(ABC):
    """A normalized n-qubit state with classical expectation access.

    epsilon is the evaluation error: 0 for deterministic backends, and the
    probabilistic contract (success >= 2/3) applies when it is positive.
    """

    support_cap = SUPPORT_CAP  # backends override when they can afford wider windows

    @property
    @abstractmethod
    def n(self) -> int: ...

    @property
    def epsilon(self) -> float:
        return 0.0

    @abstractmethod
    def description(self) -> str: ...

    @abstractmethod
    def expectation(self, obs: LocalTerm) -> float: ...

    def expectation_bilinear(self, ops: Sequence[LocalTerm]) -> complex:
        raise UnsupportedObservable(
            f"{type(self).__name__} does not evaluate operator products"
        )

    def statevector(self) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} has no dense path")

    def samplable(self):
        raise NotImplementedError(f"{type(self).__name__} has no sampling access")

    def prepare_circuit(self, eta: float):
        raise NotImplementedError(f"{type(self).__name__} has no preparation path")

    def _check_support(self, obs: LocalTerm) -> None:
        if obs.support and obs.support[-1] >= self.n:
            raise UnsupportedObservable(
                f"support {obs.support} outside [0,{self.n})"
            )
        if obs.k > self.support_cap:
            raise UnsupportedObservable(
                f"support size {obs.k} exceeds backend cap {self.support_cap}"
            )
