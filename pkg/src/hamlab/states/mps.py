"""Matrix product states: expectations, sampling, dense conversion, circuits.

Conventions: site tensors have shape (D_left, p, D_right) with edge bonds of
dimension 1, and tensors[0] belongs to qubit 0 (the leftmost tensor factor).
States are stored left-canonical; sampling works off a cached
right-canonical copy.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from ..circuits import Circuit, Gate
from ..dense import STATEVECTOR_CAP
from ..errors import (
    CanonicalizationError,
    SizeError,
    UnsupportedObservable,
    ValidationError,
)
from ..hamiltonian import LocalTerm
from .base import EvaluatableState, observable_matrix, product_on_union

ISOMETRY_TOL = 1e-10
SV_TRUNC = 1e-12


def _check_chain(tensors: Sequence[np.ndarray]) -> int:
    if not tensors:
        raise ValidationError("MPS needs at least one site")
    p = tensors[0].shape[1]
    if tensors[0].shape[0] != 1 or tensors[-1].shape[2] != 1:
        raise ValidationError("edge bond dimensions must be 1")
    for a, b in zip(tensors, tensors[1:]):
        if a.shape[2] != b.shape[0]:
            raise ValidationError(f"bond mismatch {a.shape} -> {b.shape}")
        if b.shape[1] != p:
            raise ValidationError("physical dimension must be uniform")
    return p


def _left_canonicalize(tensors: list[np.ndarray]) -> list[np.ndarray]:
    """Sweep of SVDs; singular values below SV_TRUNC are truncated."""
    out = []
    carry = np.eye(tensors[0].shape[0], dtype=complex)
    for i, t in enumerate(tensors):
        dl, p, dr = t.shape
        block = np.tensordot(carry, t.astype(complex), axes=(1, 0))
        dl = block.shape[0]
        mat = block.reshape(dl * p, dr)
        try:
            u, s, vh = np.linalg.svd(mat, full_matrices=False)
        except np.linalg.LinAlgError as exc:
            raise CanonicalizationError(f"SVD failed at site {i}") from exc
        keep = s > s[0] * SV_TRUNC if s.size and s[0] > 0 else s > SV_TRUNC
        if not np.any(keep):
            raise CanonicalizationError(f"site {i} collapsed to zero norm")
        u, s, vh = u[:, keep], s[keep], vh[keep, :]
        out.append(u.reshape(dl, p, u.shape[1]))
        carry = (s[:, None] * vh)
    norm = abs(carry[0, 0])
    if norm <= 0 or not math.isfinite(norm):
        raise CanonicalizationError("state has zero or non-finite norm")
    phase = carry[0, 0] / norm
    out[-1] = out[-1] * phase  # keep the global phase, drop the norm
    return out


def _right_canonicalize(tensors: list[np.ndarray]) -> list[np.ndarray]:
    out: list[np.ndarray] = []
    carry = np.eye(tensors[-1].shape[2], dtype=complex)
    for i in range(len(tensors) - 1, -1, -1):
        t = tensors[i].astype(complex)
        block = np.tensordot(t, carry, axes=(2, 0))
        dl, p, dr = block.shape
        mat = block.reshape(dl, p * dr)
        u, s, vh = np.linalg.svd(mat, full_matrices=False)
        keep = s > s[0] * SV_TRUNC if s.size and s[0] > 0 else s > SV_TRUNC
        u, s, vh = u[:, keep], s[keep], vh[keep, :]
        out.insert(0, vh.reshape(vh.shape[0], p, dr))
        carry = u * s[None, :]
    norm = abs(carry[0, 0])
    phase = carry[0, 0] / norm
    out[0] = out[0] * phase
    return out


class MatmulCounter:
    """Counts D x D matrix multiplications inside one expectation call."""

    def __init__(self):
        self.count = 0

    def mm(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        self.count += 1
        return a @ b

    def bulk(self, k: int) -> None:
        # one stacked matmul call performing k bond-space products
        self.count += k


class MpsState(EvaluatableState):
    support_cap = 8

    def __init__(self, tensors: Sequence[np.ndarray], canonicalize: bool = True):
        tensors = [np.asarray(t, dtype=complex) for t in tensors]
        p = _check_chain(tensors)
        if canonicalize:
            tensors = _left_canonicalize(tensors)
        self.tensors = tensors
        self._p = p
        self._right: list[np.ndarray] | None = None
        self.last_matmul_count = 0
        for i, t in enumerate(self.tensors):
            g = np.tensordot(t.conj(), t, axes=([0, 1], [0, 1]))
            if np.max(np.abs(g - np.eye(t.shape[2]))) > ISOMETRY_TOL:
                raise CanonicalizationError(f"left-isometry violated at site {i}")

    @property
    def n(self) -> int:
        return len(self.tensors)

    @property
    def p(self) -> int:
        return self._p

    @property
    def bond_dimension(self) -> int:
        return max(t.shape[2] for t in self.tensors)

    def description(self) -> str:
        return f"MPS, n={self.n}, D={self.bond_dimension}, p={self._p}"

    # -- dense access ---------------------------------------------------

    def statevector(self) -> np.ndarray:
        if self.n > STATEVECTOR_CAP:
            raise SizeError(f"n={self.n} exceeds dense cap {STATEVECTOR_CAP}")
        acc = self.tensors[0].reshape(-1, self.tensors[0].shape[2])
        for t in self.tensors[1:]:
            acc = np.tensordot(acc, t, axes=(1, 0))
            acc = acc.reshape(-1, t.shape[2])
        return acc[:, 0]

    def amplitude(self, bits: Sequence[int] | int) -> complex:
        if isinstance(bits, int):
            bits = [(bits >> (self.n - 1 - q)) & 1 for q in range(self.n)]
        if len(bits) != self.n:
            raise ValidationError("bit string length mismatch")
        v = self.tensors[0][:, bits[0], :]
        for q in range(1, self.n):
            v = v @ self.tensors[q][:, bits[q], :]
        return complex(v[0, 0])

    @classmethod
    def from_dense(cls, vec: np.ndarray, n: int, max_bond: int | None = None) -> "MpsState":
        vec = np.asarray(vec, dtype=complex)
        if vec.shape != (2**n,):
            raise ValidationError(f"vector length {vec.shape} does not match n={n}")
        nrm = np.linalg.norm(vec)
        if nrm < 1e-14:
            raise CanonicalizationError("cannot build an MPS from the zero vector")
        rest = (vec / nrm).reshape(1, -1)
        tensors = []
        for _ in range(n - 1):
            dl = rest.shape[0]
            mat = rest.reshape(dl * 2, -1)
            u, s, vh = np.linalg.svd(mat, full_matrices=False)
            keep = s > SV_TRUNC
            if max_bond is not None:
                keep[max_bond:] = False
            u, s, vh = u[:, keep], s[keep], vh[keep, :]
            tensors.append(u.reshape(dl, 2, -1))
            rest = s[:, None] * vh
        tensors.append(rest.reshape(rest.shape[0], 2, 1))
        return cls(tensors, canonicalize=True)

    # -- expectations ----------------------------------------------------

    def matmul_budget(self, k: int) -> int:
        d, p = self.bond_dimension, self._p
        return self.n * (2 * d**3 * p ** (k + 1) + d**2 * p ** (2 * k + 2))

    def _right_env(self, site: int, counter: MatmulCounter) -> np.ndarray:
        """Environment of sites >= site, as a ket x conj matrix."""
        r = np.eye(self.tensors[-1].shape[2], dtype=complex)
        for i in range(self.n - 1, site - 1, -1):
            t = self.tensors[i]
            nxt = np.zeros((t.shape[0], t.shape[0]), dtype=complex)
            for s in range(self._p):
                a = t[:, s, :]
                nxt += counter.mm(counter.mm(a, r), a.conj().T)
            r = nxt
        return r

    def _window_value(self, support: list[int], mat: np.ndarray, counter: MatmulCounter) -> complex:
        """<u| O |u> for O = mat on support, via matrix-unit branches.

        All nonzero (row, col) branches are carried as one stacked
        environment; the counter still reflects per-branch matmul cost.
        """
        k = len(support)
        lo, hi = support[0], support[-1]
        r_env = self._right_env(hi + 1, counter)
        pairs = np.argwhere(np.abs(mat) > 1e-16)
        if pairs.shape[0] == 0:
            return 0.0 + 0.0j
        rows, cols = pairs[:, 0], pairs[:, 1]
        vals = mat[rows, cols]
        npair = rows.shape[0]
        d0 = self.tensors[lo].shape[0]
        env = np.broadcast_to(np.eye(d0, dtype=complex), (npair, d0, d0)).copy()
        for site in range(lo, hi + 1):
            t = self.tensors[site]
            if site in support:
                pos = support.index(site)
                ra = (rows // self._p ** (k - 1 - pos)) % self._p
                cb = (cols // self._p ** (k - 1 - pos)) % self._p
                nxt = np.empty((npair, t.shape[2], t.shape[2]), dtype=complex)
                for va in range(self._p):
                    for vb in range(self._p):
                        sel = (ra == va) & (cb == vb)
                        m = int(sel.sum())
                        if m == 0:
                            continue
                        counter.bulk(2 * m)
                        nxt[sel] = t[:, va, :].conj().T @ env[sel] @ t[:, vb, :]
                env = nxt
            else:
                acc = np.zeros((npair, t.shape[2], t.shape[2]), dtype=complex)
                for s in range(self._p):
                    counter.bulk(2 * npair)
                    acc += t[:, s, :].conj().T @ env @ t[:, s, :]
                env = acc
        traces = np.einsum("pij,ji->p", env, r_env)
        return complex(np.dot(vals, traces))

    def expectation(self, obs: LocalTerm) -> float:
        self._check_support(obs)
        counter = MatmulCounter()
        val = self._window_value(list(obs.support), observable_matrix(obs), counter)
        self.last_matmul_count = counter.count
        return float(val.real)

    def expectation_bilinear(self, ops: Sequence[LocalTerm]) -> complex:
        union, mat = product_on_union(ops, self.support_cap)
        if union and union[-1] >= self.n:
            raise ValidationError(f"support {union} outside [0,{self.n})")
        counter = MatmulCounter()
        val = self._window_value(union, mat, counter)
        self.last_matmul_count = counter.count
        return complex(val)

    # -- sampling ----------------------------------------------------------

    def _right_form(self) -> list[np.ndarray]:
        if self._right is None:
            self._right = _right_canonicalize(self.tensors)
        return self._right

    def sample(self, rng: np.random.Generator) -> int:
        """Draw a basis index with probability |<j|u>|^2, qubit 0 first."""
        bs = self._right_form()
        w = np.ones((1, 1), dtype=complex)
        out = 0
        for i, b in enumerate(bs):
            probs = np.empty(self._p)
            branches = []
            for s in range(self._p):
                v = w @ b[:, s, :]
                branches.append(v)
                probs[s] = float(np.linalg.norm(v) ** 2)
            probs = np.clip(probs, 0.0, None)
            tot = probs.sum()
            if tot <= 0:
                raise ValidationError("sampling hit a zero-probability prefix")
            probs /= tot
            s = int(rng.choice(self._p, p=probs))
            out = out * self._p + s
            w = branches[s] / math.sqrt(max(probs[s] * tot, 1e-300))
        return out

    def samplable(self):
        from .access import SamplableAccess

        return SamplableAccess(
            n=self.n,
            norm_estimate=1.0,
            xi=0.0,
            query=lambda i: self.amplitude(i),
            sample=lambda rng: self.sample(rng),
        )

    # -- circuit synthesis ---------------------------------------------

    def to_circuit(self, eps: float = 1e-9) -> Circuit:
        """Sequential-generation circuit on n + ceil(log2 D) qubits.

        Site isometries of the right-canonical form embed into unitaries on
        the site qubit plus a bond register; the register starts and ends at
        zero, so the first n qubits carry the state. The representation is
        exact, hence any eps >= 0 fidelity target is met.
        """
        if eps < 0:
            raise ValidationError("eps must be nonnegative")
        if self._p != 2:
            raise UnsupportedObservable("circuit synthesis needs qubit sites")
        from ..synth import compile_unitary

        bs = self._right_form()
        dmax = max(max(t.shape[0], t.shape[2]) for t in bs)
        a = max(int(math.ceil(math.log2(dmax))), 0)
        if a > 2:
            raise SizeError(f"bond dimension {dmax} needs {a} ancillas; cap is 2")
        n = self.n
        bond = tuple(range(n, n + a))
        gates: list[Gate] = []
        dim_bond = 2**a
        for i, t in enumerate(bs):
            dl, _, dr = t.shape
            cols = np.zeros((dim_bond * 2, dl), dtype=complex)
            for beta in range(dl):
                for s in range(2):
                    for gamma in range(dr):
                        cols[gamma * 2 + s, beta] = t[beta, s, gamma]
            u = _complete_unitary(cols, dim_bond * 2, [b * 2 for b in range(dl)])
            qubits = bond + (i,)
            gates.extend(compile_unitary(u, qubits))
        return Circuit(n + a, tuple(gates))


def _complete_unitary(cols: np.ndarray, dim: int, col_slots: list[int]) -> np.ndarray:
    """Place the given orthonormal columns at col_slots, fill the rest."""
    m = len(col_slots)
    gram = cols.conj().T @ cols
    if np.max(np.abs(gram - np.eye(m))) > 1e-9:
        raise CanonicalizationError("site isometry columns are not orthonormal")
    u_svd, _, _ = np.linalg.svd(cols, full_matrices=True)
    comp = u_svd[:, m:]
    # project out any residual overlap from rounding, then renormalize
    comp = comp - cols @ (cols.conj().T @ comp)
    q, _ = np.linalg.qr(comp)
    out = np.zeros((dim, dim), dtype=complex)
    free = [c for c in range(dim) if c not in col_slots]
    for j, slot in enumerate(col_slots):
        out[:, slot] = cols[:, j]
    for j, slot in enumerate(free):
        out[:, slot] = q[:, j]
    if np.max(np.abs(out @ out.conj().T - np.eye(dim))) > 1e-9:
        raise CanonicalizationError("unitary completion failed")
    return out


def _tensor_to_nested(t: np.ndarray) -> list:
    dl, p, dr = t.shape
    return [
        [[[float(t[a, s, b].real), float(t[a, s, b].imag)] for b in range(dr)]
         for s in range(p)]
        for a in range(dl)
    ]


def mps_to_payload(state: MpsState) -> dict:
    return {"tensors": [_tensor_to_nested(t) for t in state.tensors]}


def mps_from_payload(n: int, payload: dict) -> MpsState:
    tensors = []
    for nested in payload["tensors"]:
        arr = np.asarray(nested, dtype=float)
        if arr.ndim != 4 or arr.shape[3] != 2:
            raise ValidationError("MPS tensor entries must be [re, im] pairs")
        tensors.append(arr[..., 0] + 1j * arr[..., 1])
    if len(tensors) != n:
        raise ValidationError(f"expected {n} site tensors, got {len(tensors)}")
    return MpsState(tensors)


def ghz_mps(n: int) -> MpsState:
    """GHZ as a D=2 chain, for tests and examples."""
    if n < 2:
        raise ValidationError("GHZ needs n >= 2")
    mid = np.zeros((2, 2, 2), dtype=complex)
    mid[0, 0, 0] = 1.0
    mid[1, 1, 1] = 1.0
    first = np.zeros((1, 2, 2), dtype=complex)
    first[0, 0, 0] = 1.0
    first[0, 1, 1] = 1.0
    last = np.zeros((2, 2, 1), dtype=complex)
    last[0, 0, 0] = 1.0 / math.sqrt(2)
    last[1, 1, 0] = 1.0 / math.sqrt(2)
    return MpsState([first] + [mid] * (n - 2) + [last])


def random_mps(n: int, bond: int, rng: np.random.Generator, p: int = 2) -> MpsState:
    tensors = []
    dl = 1
    for i in range(n):
        dr = min(bond, p ** (i + 1), p ** (n - i - 1)) if i < n - 1 else 1
        shape = (dl, p, dr)
        t = rng.normal(size=shape) + 1j * rng.normal(size=shape)
        tensors.append(t)
        dl = dr
    return MpsState(tensors)
