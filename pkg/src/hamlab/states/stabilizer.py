"""Stabilizer states: tableau simulation, Pauli expectations, exact sampling.

Rows store generators as (x bits, z bits, sign bit) in the Hermitian
convention: (1,0) = X, (0,1) = Z, (1,1) = Y, overall sign (-1)^r. Basis
amplitudes come from the affine canonical form: row-reduce the X parts to
find the coset the support lives on, pin one reference amplitude positive,
then walk the coset applying generators. The global phase is fixed by that
convention.
"""

from __future__ import annotations

import math
from itertools import product as iproduct
from typing import Sequence

import numpy as np

from ..circuits import Gate
from ..dense import STATEVECTOR_CAP
from ..errors import (
    CanonicalizationError,
    SizeError,
    UnknownGate,
    ValidationError,
)
from ..hamiltonian import PAULI, LocalTerm
from .base import EvaluatableState, observable_matrix, product_on_union

CLIFFORD_GATES = {"h", "s", "sdg", "x", "y", "z", "cnot", "cx", "cz", "swap", "i"}

_LETTER_XZ = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}


def _g_exponents(x1, z1, x2, z2):
    """Per-site exponent of i when multiplying W(x1,z1) * W(x2,z2)."""
    x1 = x1.astype(np.int64)
    z1 = z1.astype(np.int64)
    x2 = x2.astype(np.int64)
    z2 = z2.astype(np.int64)
    out = np.zeros_like(x1)
    both = (x1 == 1) & (z1 == 1)
    out[both] = (z2 - x2)[both]
    xonly = (x1 == 1) & (z1 == 0)
    out[xonly] = (z2 * (2 * x2 - 1))[xonly]
    zonly = (x1 == 0) & (z1 == 1)
    out[zonly] = (x2 * (1 - 2 * z2))[zonly]
    return out


class _PauliRow:
    __slots__ = ("x", "z", "phase")

    def __init__(self, x, z, phase):
        self.x = x.astype(np.uint8)
        self.z = z.astype(np.uint8)
        self.phase = int(phase) % 4  # exponent of i

    def mul(self, other: "_PauliRow") -> "_PauliRow":
        ph = self.phase + other.phase + int(np.sum(_g_exponents(self.x, self.z, other.x, other.z)))
        return _PauliRow(self.x ^ other.x, self.z ^ other.z, ph % 4)


class StabilizerState(EvaluatableState):
    def __init__(self, n: int, gates: Sequence[Gate] = ()):
        if n < 1:
            raise ValidationError("need at least one qubit")
        self._n = n
        self.x = np.zeros((n, n), dtype=np.uint8)
        self.z = np.eye(n, dtype=np.uint8)
        self.r = np.zeros(n, dtype=np.uint8)
        self.gates = tuple(gates)
        for g in self.gates:
            self._apply(g)
        self._affine = None

    @property
    def n(self) -> int:
        return self._n

    def description(self) -> str:
        return f"stabilizer state, n={self._n}, {len(self.gates)} Clifford gates"

    # -- tableau update ---------------------------------------------------

    def _apply(self, gate: Gate) -> None:
        name = gate.name
        if name not in CLIFFORD_GATES:
            raise UnknownGate(f"non-Clifford gate {name!r} in stabilizer circuit")
        q = gate.qubits
        if any(v >= self._n for v in q):
            raise ValidationError(f"gate {name} on {q} out of range")
        x, z, r = self.x, self.z, self.r
        if name == "i":
            return
        if name == "h":
            a = q[0]
            r ^= x[:, a] & z[:, a]
            x[:, a], z[:, a] = z[:, a].copy(), x[:, a].copy()
        elif name == "s":
            a = q[0]
            r ^= x[:, a] & z[:, a]
            z[:, a] ^= x[:, a]
        elif name == "sdg":
            for _ in range(3):
                self._apply(Gate("s", q))
        elif name == "x":
            r ^= z[:, q[0]]
        elif name == "y":
            r ^= x[:, q[0]] ^ z[:, q[0]]
        elif name == "z":
            r ^= x[:, q[0]]
        elif name in ("cnot", "cx"):
            a, b = q
            r ^= x[:, a] & z[:, b] & (x[:, b] ^ z[:, a] ^ 1)
            x[:, b] ^= x[:, a]
            z[:, a] ^= z[:, b]
        elif name == "cz":
            a, b = q
            self._apply(Gate("h", (b,)))
            self._apply(Gate("cnot", (a, b)))
            self._apply(Gate("h", (b,)))
        elif name == "swap":
            a, b = q
            self._apply(Gate("cnot", (a, b)))
            self._apply(Gate("cnot", (b, a)))
            self._apply(Gate("cnot", (a, b)))

    # -- Pauli expectations ----------------------------------------------

    def _rows(self) -> list[_PauliRow]:
        return [
            _PauliRow(self.x[i], self.z[i], 2 * int(self.r[i]))
            for i in range(self._n)
        ]

    def pauli_expectation(self, letters: str, support: Sequence[int]) -> int:
        """<W> for the Pauli word W given by letters on support: -1, 0 or +1."""
        if len(letters) != len(support):
            raise ValidationError("letters and support length mismatch")
        xp = np.zeros(self._n, dtype=np.uint8)
        zp = np.zeros(self._n, dtype=np.uint8)
        for ch, qq in zip(letters.upper(), support):
            if ch not in _LETTER_XZ:
                raise ValidationError(f"bad Pauli letter {ch!r}")
            xb, zb = _LETTER_XZ[ch]
            xp[qq] = xb
            zp[qq] = zb
        return self._pauli_value(xp, zp)

    def _pauli_value(self, xp: np.ndarray, zp: np.ndarray) -> int:
        x64 = self.x.astype(np.int64)
        z64 = self.z.astype(np.int64)
        sym = (x64 @ zp.astype(np.int64) + z64 @ xp.astype(np.int64)) % 2
        if np.any(sym):
            return 0
        # solve for the generator subset whose product is +-W
        m = np.concatenate([self.x, self.z], axis=1).astype(np.uint8)
        target = np.concatenate([xp, zp]).astype(np.uint8)
        coeff = _gf2_solve(m.T.copy(), target.copy())
        if coeff is None:
            return 0  # commuting but outside the group cannot happen at full rank
        acc = _PauliRow(np.zeros(self._n, np.uint8), np.zeros(self._n, np.uint8), 0)
        for i in range(self._n):
            if coeff[i]:
                acc = acc.mul(_PauliRow(self.x[i], self.z[i], 2 * int(self.r[i])))
        if not (np.array_equal(acc.x, xp) and np.array_equal(acc.z, zp)):
            raise CanonicalizationError("tableau solve produced the wrong word")
        if acc.phase == 0:
            return 1
        if acc.phase == 2:
            return -1
        raise CanonicalizationError("non-Hermitian phase in stabilizer product")

    def _pauli_decomposition(self, support: Sequence[int], mat: np.ndarray):
        k = len(support)
        for letters in iproduct("IXYZ", repeat=k):
            w = np.array([[1.0]], dtype=complex)
            for ch in letters:
                w = np.kron(w, PAULI[ch])
            c = np.trace(w @ mat) / 2**k
            if abs(c) > 1e-14:
                yield "".join(letters), complex(c)

    def expectation(self, obs: LocalTerm) -> float:
        self._check_support(obs)
        mat = observable_matrix(obs)
        total = 0.0
        for letters, c in self._pauli_decomposition(obs.support, mat):
            total += (c * self.pauli_expectation(letters, obs.support)).real
        return float(total)

    def expectation_bilinear(self, ops: Sequence[LocalTerm]) -> complex:
        union, mat = product_on_union(ops, self.support_cap)
        if union and union[-1] >= self._n:
            raise ValidationError(f"support {union} outside [0,{self._n})")
        total = 0.0 + 0.0j
        for letters, c in self._pauli_decomposition(union, mat):
            total += c * self.pauli_expectation(letters, union)
        return complex(total)

    # -- affine canonical form -------------------------------------------

    def _affine_form(self):
        if self._affine is not None:
            return self._affine
        rows = self._rows()
        n = self._n
        # row-reduce on the X block, tracking phases
        pivots: list[int] = []
        cur = 0
        for col in range(n):
            sel = None
            for rr in range(cur, n):
                if rows[rr].x[col]:
                    sel = rr
                    break
            if sel is None:
                continue
            rows[cur], rows[sel] = rows[sel], rows[cur]
            for rr in range(n):
                if rr != cur and rows[rr].x[col]:
                    rows[rr] = rows[rr].mul(rows[cur])
            pivots.append(col)
            cur += 1
        rank = cur
        xrows = rows[:rank]
        zrows = rows[rank:]
        for row in zrows:
            if row.phase not in (0, 2):
                raise CanonicalizationError("Z-type row with imaginary sign")
        a_mat = np.array([row.z for row in zrows], dtype=np.uint8).reshape(len(zrows), n)
        rhs = np.array([row.phase // 2 for row in zrows], dtype=np.uint8)
        x0 = _gf2_particular(a_mat.copy(), rhs.copy())
        if x0 is None:
            raise CanonicalizationError("inconsistent Z constraints in tableau")
        self._affine = (xrows, pivots, x0, rank)
        return self._affine

    def _walk_factor(self, row: _PauliRow, cur: np.ndarray) -> complex:
        wy = int(np.sum((row.x & row.z).astype(np.int64)))
        zb = int(row.z.astype(np.int64) @ cur.astype(np.int64)) % 2
        return (1j**row.phase) * (1j**wy) * (-1.0) ** zb

    def amplitude(self, i: int) -> complex:
        xrows, pivots, x0, rank = self._affine_form()
        bits = np.array([(i >> (self._n - 1 - q)) & 1 for q in range(self._n)], dtype=np.uint8)
        delta = bits ^ x0
        y = [int(delta[p]) for p in pivots]
        check = x0.copy()
        for l, yl in enumerate(y):
            if yl:
                check = check ^ xrows[l].x
        if not np.array_equal(check, bits):
            return 0.0
        amp = complex(2.0 ** (-rank / 2.0))
        cur = x0.copy()
        for l, yl in enumerate(y):
            if yl:
                amp *= self._walk_factor(xrows[l], cur)
                cur = cur ^ xrows[l].x
        return amp

    def statevector(self) -> np.ndarray:
        if self._n > STATEVECTOR_CAP:
            raise SizeError(f"n={self._n} exceeds dense cap {STATEVECTOR_CAP}")
        xrows, pivots, x0, rank = self._affine_form()
        psi = np.zeros(2**self._n, dtype=complex)
        cur = x0.copy()
        amp = complex(2.0 ** (-rank / 2.0))
        weights = 1 << (self._n - 1 - np.arange(self._n))

        def idx(bits):
            return int(bits.astype(np.int64) @ weights)

        psi[idx(cur)] = amp
        gray = 0
        for step in range(1, 2**rank):
            flip = (step & -step).bit_length() - 1  # trailing-zero count
            gray ^= 1 << flip
            row = xrows[flip]
            amp *= self._walk_factor(row, cur)
            cur = cur ^ row.x
            psi[idx(cur)] = amp
        return psi

    # -- sampling ----------------------------------------------------------

    def sample(self, rng: np.random.Generator) -> int:
        xrows, pivots, x0, rank = self._affine_form()
        cur = x0.copy()
        for l in range(rank):
            if rng.integers(2):
                cur = cur ^ xrows[l].x
        return int(cur.astype(np.int64) @ (1 << (self._n - 1 - np.arange(self._n))))

    def samplable(self):
        from .access import SamplableAccess

        return SamplableAccess(
            n=self._n,
            norm_estimate=1.0,
            xi=0.0,
            query=lambda i: self.amplitude(i),
            sample=lambda rng: self.sample(rng),
        )

    def to_payload(self) -> dict:
        return {
            "gates": [
                {"name": g.name, "qubits": list(g.qubits)} for g in self.gates
            ]
        }

    @classmethod
    def from_payload(cls, n: int, payload: dict) -> "StabilizerState":
        gates = [Gate(g["name"], tuple(g["qubits"])) for g in payload["gates"]]
        return cls(n, gates)


def _gf2_solve(a: np.ndarray, b: np.ndarray):
    """Solve a @ x = b over GF(2); a is (rows x cols). None if inconsistent."""
    rows, cols = a.shape
    aug = np.concatenate([a, b.reshape(-1, 1)], axis=1).astype(np.uint8)
    piv: list[tuple[int, int]] = []
    rr = 0
    for c in range(cols):
        sel = None
        for t in range(rr, rows):
            if aug[t, c]:
                sel = t
                break
        if sel is None:
            continue
        aug[[rr, sel]] = aug[[sel, rr]]
        for t in range(rows):
            if t != rr and aug[t, c]:
                aug[t] ^= aug[rr]
        piv.append((rr, c))
        rr += 1
        if rr == rows:
            break
    x = np.zeros(cols, dtype=np.uint8)
    for t in range(rr, rows):
        if aug[t, cols]:
            return None
    for t, c in piv:
        x[c] = aug[t, cols]
    if np.any((a.astype(np.int64) @ x.astype(np.int64)) % 2 != b % 2):
        return None
    return x


def _gf2_particular(a: np.ndarray, b: np.ndarray):
    if a.size == 0:
        return np.zeros(a.shape[1] if a.ndim == 2 else 0, dtype=np.uint8)
    return _gf2_solve(a, b)


def random_clifford_gates(n: int, rng: np.random.Generator, length: int | None = None) -> list[Gate]:
    """A random Clifford circuit as an explicit gate list (for tests)."""
    length = length if length is not None else 3 * n * n
    out: list[Gate] = []
    for _ in range(length):
        kind = rng.integers(3)
        if kind == 0:
            out.append(Gate("h", (int(rng.integers(n)),)))
        elif kind == 1:
            out.append(Gate("s", (int(rng.integers(n)),)))
        else:
            if n < 2:
                out.append(Gate("h", (0,)))
                continue
            a, b = rng.choice(n, size=2, replace=False)
            out.append(Gate("cnot", (int(a), int(b))))
    return out
