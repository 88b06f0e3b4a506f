"""Query-and-sampling access to states, and the quadratic-form estimator."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from ..errors import AccessError, ValidationError
from ..hamiltonian import LocalHamiltonian


class SamplableAccess:
    """Amplitude queries u_i, samples j ~ |u_j|^2/|u|^2, and a norm estimate.

    xi bounds the distortion of both the sampler and the norm estimate;
    every backend built here is exact, so xi = 0. A query budget, when set,
    is enforced across the whole lifetime of the object.
    """

    def __init__(
        self,
        n: int,
        norm_estimate: float,
        xi: float,
        query: Callable[[int], complex],
        sample: Callable[[np.random.Generator], int],
        query_budget: int | None = None,
    ):
        self.n = n
        self.norm_estimate = float(norm_estimate)
        self.xi = float(xi)
        self._query = query
        self._sample = sample
        self.query_budget = query_budget
        self.queries_used = 0
        self.samples_used = 0

    def query(self, i: int) -> complex:
        if self.query_budget is not None and self.queries_used >= self.query_budget:
            raise AccessError(f"query budget {self.query_budget} exhausted")
        self.queries_used += 1
        return complex(self._query(int(i)))

    def sample(self, rng: np.random.Generator) -> int:
        self.samples_used += 1
        return int(self._sample(rng))


def ham_row(h: LocalHamiltonian, j: int) -> dict[int, complex]:
    """Nonzero entries of row j of the Hamiltonian matrix, by column index."""
    n = h.n
    if not 0 <= j < 2**n:
        raise ValidationError(f"row index {j} outside [0, 2^{n})")
    row: dict[int, complex] = {}
    for term in h.terms:
        k = term.k
        shifts = [n - 1 - q for q in term.support]
        r_loc = 0
        for s in shifts:
            r_loc = (r_loc << 1) | ((j >> s) & 1)
        base = j
        for s in shifts:
            base &= ~(1 << s)
        for c_loc in range(2**k):
            val = term.weight * term.matrix[r_loc, c_loc]
            if abs(val) < 1e-16:
                continue
            col = base
            for pos, s in enumerate(shifts):
                if (c_loc >> (k - 1 - pos)) & 1:
                    col |= 1 << s
            row[col] = row.get(col, 0.0) + complex(val)
    return {c: v for c, v in row.items() if abs(v) > 1e-16}


def sampling_estimate_quadratic(
    access: SamplableAccess,
    a: LocalHamiltonian,
    eps: float,
    rng: np.random.Generator,
    delta: float = 0.05,
) -> float:
    """Estimate u†Au within eps (probability >= 1 - delta) from samples.

    One draw: sample j, then X = |u|^2 (Au)_j / u_j, whose mean is u†Au and
    whose second moment is at most |u|^4 |A|^2. Median of batch means turns
    the Chebyshev bound into the stated confidence.
    """
    if eps <= 0:
        raise ValidationError("eps must be positive")
    if not 0 < delta < 1:
        raise ValidationError("delta must be in (0,1)")
    if access.xi > eps / 8.0:
        raise ValidationError(f"sampler distortion xi={access.xi} exceeds eps/8")
    if access.n != a.n:
        raise ValidationError("state and operator qubit counts differ")
    a.assert_norm_bound(allow_loose=True)
    norm_sq = access.norm_estimate**2
    batch = int(math.ceil(4.0 / eps**2))
    n_batches = int(math.ceil(9.0 * math.log(1.0 / delta)))
    row_cache: dict[int, dict[int, complex]] = {}
    means = []
    for _ in range(n_batches):
        acc = 0.0
        for _ in range(batch):
            j = access.sample(rng)
            u_j = access.query(j)
            if abs(u_j) == 0.0:
                raise AccessError("sampler returned an index with zero amplitude")
            row = row_cache.get(j)
            if row is None:
                row = ham_row(a, j)
                row_cache[j] = row
            au_j = 0.0 + 0.0j
            for col, val in row.items():
                au_j += val * access.query(col)
            acc += (norm_sq * au_j / u_j).real
        means.append(acc / batch)
    means.sort()
    mid = len(means) // 2
    if len(means) % 2:
        return float(means[mid])
    return float(0.5 * (means[mid - 1] + means[mid]))
