"""Uniform superpositions over explicit subsets of basis strings."""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from ..dense import STATEVECTOR_CAP
from ..errors import SizeError, ValidationError
from ..hamiltonian import LocalTerm
from .base import EvaluatableState, observable_matrix, product_on_union


def _as_index(n: int, item) -> int:
    if isinstance(item, str):
        if len(item) != n or any(c not in "01" for c in item):
            raise ValidationError(f"bad basis string {item!r} for n={n}")
        return int(item, 2)
    idx = int(item)
    if not 0 <= idx < 2**n:
        raise ValidationError(f"basis index {idx} outside [0, 2^{n})")
    return idx


class SubsetState(EvaluatableState):
    """u = (1/sqrt|S|) sum_{i in S} |i>. Exact rational bookkeeping via 1/|S|."""

    support_cap = 12

    def __init__(self, n: int, members: Iterable):
        if n < 1:
            raise ValidationError("need at least one qubit")
        idx = sorted({_as_index(n, it) for it in members})
        if not idx:
            raise ValidationError("subset must be nonempty")
        self._n = n
        self.members = tuple(idx)
        self._member_set = frozenset(idx)

    @property
    def n(self) -> int:
        return self._n

    @property
    def size(self) -> int:
        return len(self.members)

    def description(self) -> str:
        return f"subset state, n={self._n}, |S|={self.size}"

    def amplitude(self, i: int) -> complex:
        return 1.0 / math.sqrt(self.size) if i in self._member_set else 0.0

    def statevector(self) -> np.ndarray:
        if self._n > STATEVECTOR_CAP:
            raise SizeError(f"n={self._n} exceeds dense cap {STATEVECTOR_CAP}")
        v = np.zeros(2**self._n, dtype=complex)
        v[list(self.members)] = 1.0 / math.sqrt(self.size)
        return v

    def _double_sum(self, support: Sequence[int], mat: np.ndarray) -> complex:
        """(1/|S|) sum_{i,j in S} <i|O|j> for O = mat embedded on support.

        <i|O|j> vanishes unless i and j agree outside the support, so the
        sum groups members by their off-support bits first.
        """
        n = self._n
        mask = 0
        for q in support:
            mask |= 1 << (n - 1 - q)
        groups: dict[int, list[int]] = {}
        for m in self.members:
            groups.setdefault(m & ~mask, []).append(m)
        total = 0.0 + 0.0j
        for bucket in groups.values():
            locals_ = []
            for m in bucket:
                a = 0
                for pos, q in enumerate(support):
                    bit = (m >> (n - 1 - q)) & 1
                    a = (a << 1) | bit
                locals_.append(a)
            for a in locals_:
                for b in locals_:
                    total += mat[a, b]
        return total / self.size

    def expectation(self, obs: LocalTerm) -> float:
        self._check_support(obs)
        val = self._double_sum(list(obs.support), observable_matrix(obs))
        return float(val.real)

    def expectation_bilinear(self, ops: Sequence[LocalTerm]) -> complex:
        union, mat = product_on_union(ops, self.support_cap)
        if union and union[-1] >= self._n:
            raise ValidationError(f"support {union} outside [0,{self._n})")
        return complex(self._double_sum(union, mat))

    def samplable(self):
        from .access import SamplableAccess

        amp = 1.0 / math.sqrt(self.size)
        members = self.members

        def query(i: int) -> complex:
            return amp if i in self._member_set else 0.0

        def sample(rng: np.random.Generator) -> int:
            return int(members[rng.integers(len(members))])

        return SamplableAccess(n=self._n, norm_estimate=1.0, xi=0.0,
                               query=query, sample=sample)

    def to_payload(self) -> dict:
        return {"strings": [format(m, f"0{self._n}b") for m in self.members]}

    @classmethod
    def from_payload(cls, n: int, payload: dict) -> "SubsetState":
        return cls(n, payload["strings"])
