"""Data model for k-local Hamiltonians.

A Hamiltonian is a weighted sum of local terms, each a dense Hermitian
matrix on an explicit ordered support of qubits. Qubit 0 is the leftmost
tensor factor, so the computational-basis index of the bit string
b_0 b_1 ... b_{n-1} is sum_q b_q * 2^(n-1-q).

Refinements (diagonal, projector-sum) are subclasses that tighten the
per-term invariants. Everything is immutable after construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import ParseError, SizeError, ValidationError

HERMITICITY_TOL = 1e-12
IDEMPOTENCY_TOL = 1e-10
ZERO_ENERGY_TOL = 1e-9
NORM_TOL = 1e-12

DENSE_QUBIT_CAP = 12

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _as_matrix(obj) -> np.ndarray:
    mat = np.asarray(obj, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValidationError(f"term matrix must be square, got shape {mat.shape}")
    k = int(round(math.log2(mat.shape[0])))
    if 2**k != mat.shape[0]:
        raise ValidationError(f"term matrix dimension {mat.shape[0]} is not a power of 2")
    return mat


@dataclass(frozen=True, eq=False)
class LocalTerm:
    """One k-local Hermitian term: `weight * matrix` acting on `support`."""

    support: tuple[int, ...]
    matrix: np.ndarray
    weight: float = 1.0

    def __post_init__(self):
        support = tuple(int(q) for q in self.support)
        object.__setattr__(self, "support", support)
        mat = _as_matrix(self.matrix)
        if any(b <= a for a, b in zip(support, support[1:])):
            raise ValidationError(f"support {support} is not strictly increasing")
        if support and support[0] < 0:
            raise ValidationError(f"negative qubit index in support {support}")
        if mat.shape[0] != 2 ** len(support):
            raise ValidationError(
                f"matrix dimension {mat.shape[0]} does not match support size {len(support)}"
            )
        if np.max(np.abs(mat - mat.conj().T)) > HERMITICITY_TOL:
            raise ValidationError("term matrix is not Hermitian within 1e-12")
        if np.linalg.norm(mat, 2) > 1.0 + NORM_TOL:
            raise ValidationError("term matrix operator norm exceeds 1")
        if not (self.weight >= 0.0) or not math.isfinite(self.weight):
            raise ValidationError(f"term weight must be a finite nonnegative real, got {self.weight}")
        mat = mat.copy()
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "weight", float(self.weight))

    @property
    def k(self) -> int:
        return len(self.support)

    def is_diagonal(self) -> bool:
        off = self.matrix - np.diag(np.diag(self.matrix))
        return bool(np.all(off == 0))

    def is_projector(self, tol: float = IDEMPOTENCY_TOL) -> bool:
        m = self.matrix
        return bool(np.linalg.norm(m @ m - m, 2) <= tol)

    def embed(self, n: int) -> np.ndarray:
        """Dense 2^n x 2^n matrix of this term (weight included)."""
        return self.weight * embed_matrix(self.matrix, self.support, n)

    def local_index(self, bits: Sequence[int]) -> int:
        """Row index into `matrix` for the given full bit assignment."""
        idx = 0
        for q in self.support:
            idx = (idx << 1) | (bits[q] & 1)
        return idx


def embed_matrix(mat: np.ndarray, support: Sequence[int], n: int) -> np.ndarray:
    """Embed a matrix on `support` into the full n-qubit space (no weight)."""
    k = len(support)
    if k > n or (support and max(support) >= n):
        raise ValidationError(f"support {tuple(support)} does not fit in {n} qubits")
    if k == 0:
        return np.eye(2**n, dtype=complex)
    if n > 2 * DENSE_QUBIT_CAP:
        raise SizeError(f"refusing to materialize a {n}-qubit dense matrix")
    rest = [q for q in range(n) if q not in set(support)]
    order = list(support) + rest
    pos = [0] * n
    for i, q in enumerate(order):
        pos[q] = i
    full = np.kron(mat, np.eye(2 ** (n - k), dtype=complex))
    full = full.reshape((2,) * (2 * n))
    axes = [pos[q] for q in range(n)] + [n + pos[q] for q in range(n)]
    return full.transpose(axes).reshape(2**n, 2**n)


def expand_on_support(mat: np.ndarray, support: Sequence[int], target: Sequence[int]) -> np.ndarray:
    """Rewrite a matrix on `support` as a matrix on the larger ordered `target`."""
    target = tuple(target)
    positions = []
    for q in support:
        if q not in target:
            raise ValidationError(f"qubit {q} missing from target support {target}")
        positions.append(target.index(q))
    return embed_matrix(mat, positions, len(target))


class LocalHamiltonian:
    """Weighted sum of local terms on n qubits."""

    kind = "general"

    def __init__(self, n: int, terms: Iterable[LocalTerm]):
        self.n = int(n)
        # canonical term order: results are invariant under input permutation
        self.terms = tuple(
            sorted(terms, key=lambda t: (t.support, t.weight, t.matrix.tobytes()))
        )
        if self.n < 1:
            raise ValidationError(f"need at least one qubit, got n={n}")
        for t in self.terms:
            if t.support and t.support[-1] >= self.n:
                raise ValidationError(
                    f"term support {t.support} out of range for n={self.n}"
                )
        self._validate()

    def _validate(self):
        pass

    @property
    def m(self) -> int:
        return len(self.terms)

    @property
    def locality_k(self) -> int:
        return max((t.k for t in self.terms), default=0)

    @property
    def weight_sum(self) -> float:
        return float(sum(t.weight for t in self.terms))

    def dense(self) -> np.ndarray:
        if self.n > DENSE_QUBIT_CAP:
            raise SizeError(f"dense materialization capped at {DENSE_QUBIT_CAP} qubits, got n={self.n}")
        out = np.zeros((2**self.n, 2**self.n), dtype=complex)
        for t in self.terms:
            out += t.embed(self.n)
        return out

    def triangle_norm_bound(self) -> float:
        return float(sum(t.weight * np.linalg.norm(t.matrix, 2) for t in self.terms))

    def operator_norm(self) -> float:
        """Exact operator norm via the dense path (n <= 12)."""
        evals = np.linalg.eigvalsh(self.dense())
        return float(np.max(np.abs(evals)))

    def assert_norm_bound(self, allow_loose: bool = False, tol: float = 1e-9) -> dict:
        """Check the promise that the full operator norm is <= 1.

        Dense check for n <= 12; for larger n the triangle bound
        sum_i w_i ||H_i|| <= 1 is sufficient but not necessary, so a
        failing triangle bound is only accepted with allow_loose.
        """
        if self.n <= DENSE_QUBIT_CAP:
            norm = self.operator_norm()
            if norm > 1.0 + tol:
                raise ValidationError(f"operator norm {norm:.6g} exceeds 1 (dense check)")
            return {"mode": "dense", "norm": norm}
        bound = self.triangle_norm_bound()
        if bound > 1.0 + tol and not allow_loose:
            raise ValidationError(
                f"triangle norm bound {bound:.6g} exceeds 1; pass allow_loose to accept the promise as-is"
            )
        return {"mode": "triangle", "norm": bound, "loose": bound > 1.0 + tol}

    def is_diagonal(self) -> bool:
        return all(t.is_diagonal() for t in self.terms)

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n}, m={self.m}, k={self.locality_k})"


class DiagonalHamiltonian(LocalHamiltonian):
    """Every term matrix diagonal in the computational basis."""

    kind = "diagonal"

    def _validate(self):
        for t in self.terms:
            if not t.is_diagonal():
                raise ValidationError("diagonal Hamiltonian contains a non-diagonal term")

    def basis_energy(self, y) -> float:
        """<y|H|y> computed combinatorially from the selected diagonal entries.

        `y` is either an integer basis index or a bit sequence.
        """
        if isinstance(y, (int, np.integer)):
            bits = [(int(y) >> (self.n - 1 - q)) & 1 for q in range(self.n)]
        else:
            bits = [int(b) for b in y]
            if len(bits) != self.n:
                raise ValidationError(f"bit string length {len(bits)} != n={self.n}")
        total = 0.0
        for t in self.terms:
            idx = t.local_index(bits)
            total += t.weight * t.matrix[idx, idx].real
        return total


class ProjectorSumHamiltonian(LocalHamiltonian):
    """Unweighted sum of local orthogonal projectors."""

    kind = "projector_sum"

    def _validate(self):
        for t in self.terms:
            if abs(t.weight - 1.0) > 1e-12:
                raise ValidationError("projector-sum terms must all have weight 1")
            if not t.is_projector():
                raise ValidationError("projector-sum term fails idempotency within 1e-10")


def is_stoquastic(h: LocalHamiltonian) -> bool:
    """True iff every term has real, nonpositive off-diagonal entries."""
    for t in h.terms:
        off = t.matrix - np.diag(np.diag(t.matrix))
        if np.max(np.abs(off.imag)) > HERMITICITY_TOL:
            return False
        if np.max(off.real) > HERMITICITY_TOL:
            return False
    return True


def is_projector_sum(h: LocalHamiltonian) -> bool:
    return all(abs(t.weight - 1.0) <= 1e-12 and t.is_projector() for t in h.terms)


def frustration_free_check(h: LocalHamiltonian) -> bool:
    """True iff the smallest eigenvalue is ~0 (dense path, n <= 12)."""
    if h.n > DENSE_QUBIT_CAP:
        raise SizeError(f"frustration-free check needs n <= {DENSE_QUBIT_CAP}, got {h.n}")
    lam0 = float(np.linalg.eigvalsh(h.dense())[0])
    return lam0 <= ZERO_ENERGY_TOL


def qsat_form(h: LocalHamiltonian) -> tuple[ProjectorSumHamiltonian, int]:
    """Rewrite a weighted projector sum as an unweighted one.

    Weights must be integers or reciprocals of integers. The whole operator
    is scaled by the least common multiple L of the denominators and each
    projector replicated weight*L times; returns (scaled Hamiltonian, L).
    """
    fracs = []
    for t in h.terms:
        if not t.is_projector():
            raise ValidationError("qsat rewriting needs every term to be a projector")
        f = Fraction(t.weight).limit_denominator(10**6)
        if abs(float(f) - t.weight) > 1e-9 or (f.numerator != 1 and f.denominator != 1):
            raise ValidationError(
                f"weight {t.weight} is neither an integer nor a reciprocal of one"
            )
        fracs.append(f)
    scale = 1
    for f in fracs:
        scale = scale * f.denominator // math.gcd(scale, f.denominator)
    terms = []
    for t, f in zip(h.terms, fracs):
        copies = int(f * scale)
        terms.extend(
            LocalTerm(t.support, t.matrix, 1.0) for _ in range(copies)
        )
    return ProjectorSumHamiltonian(h.n, terms), scale


# -- text format ---------------------------------------------------------

_KINDS = {
    "general": LocalHamiltonian,
    "diagonal": DiagonalHamiltonian,
    "stoquastic": LocalHamiltonian,
    "projector_sum": ProjectorSumHamiltonian,
}


def _matrix_to_pairs(mat: np.ndarray) -> list[list[float]]:
    return [[float(z.real), float(z.imag)] for z in mat.reshape(-1)]


def _pairs_to_matrix(pairs, k: int) -> np.ndarray:
    dim = 2**k
    if len(pairs) != dim * dim:
        raise ParseError(f"matrix entry count {len(pairs)} != {dim}*{dim}")
    flat = []
    for p in pairs:
        if not (isinstance(p, (list, tuple)) and len(p) == 2):
            raise ParseError(f"matrix entries must be [re, im] pairs, got {p!r}")
        flat.append(complex(float(p[0]), float(p[1])))
    return np.array(flat, dtype=complex).reshape(dim, dim)


def to_json(h: LocalHamiltonian) -> dict:
    return {
        "n": h.n,
        "kind": h.kind,
        "terms": [
            {
                "support": list(t.support),
                "weight": t.weight,
                "matrix": _matrix_to_pairs(t.matrix),
            }
            for t in h.terms
        ],
    }


def to_text(h: LocalHamiltonian) -> str:
    return json.dumps(to_json(h), indent=1)


def ingest(text: str) -> LocalHamiltonian:
    """Parse the Hamiltonian file format and validate the result."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object")
    try:
        n = int(doc["n"])
        raw_terms = doc["terms"]
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"missing or malformed required field: {e}") from e
    kind = doc.get("kind", "general")
    if kind not in _KINDS:
        raise ParseError(f"unknown kind {kind!r}")
    if not isinstance(raw_terms, list):
        raise ParseError("terms must be a list")
    terms = []
    for i, rt in enumerate(raw_terms):
        if not isinstance(rt, dict):
            raise ParseError(f"term {i} must be an object")
        try:
            support = tuple(int(q) for q in rt["support"])
            weight = float(rt.get("weight", 1.0))
            pairs = rt["matrix"]
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"term {i}: {e}") from e
        mat = _pairs_to_matrix(pairs, len(support))
        terms.append(LocalTerm(support, mat, weight))
    h = _KINDS[kind](n, terms)
    if kind == "stoquastic" and not is_stoquastic(h):
        raise ValidationError("file claims stoquastic but a term has a bad off-diagonal")
    return h


def pauli_term(letters: str, support: Sequence[int], weight: float = 1.0) -> LocalTerm:
    """Convenience: a weighted Pauli string as a LocalTerm."""
    if len(letters) != len(support):
        raise ValidationError("one Pauli letter per support qubit")
    mat = np.array([[1.0 + 0j]])
    for c in letters.upper():
        if c not in PAULI:
            raise ValidationError(f"unknown Pauli letter {c!r}")
        mat = np.kron(mat, PAULI[c])
    order = np.argsort(support)
    sorted_support = tuple(int(support[i]) for i in order)
    if sorted_support != tuple(support):
        perm_mat = expand_on_support(mat, [sorted_support.index(q) for q in support], range(len(support)))
        mat = perm_mat
    return LocalTerm(sorted_support, mat, weight)
