"""Brute-force ground truth: statevectors, diagonalization, matrix functions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .circuits import Circuit, gate_matrix
from .errors import DimensionMismatch, SizeError, ValidationError
from .hamiltonian import LocalHamiltonian

STATEVECTOR_CAP = 14
DIAG_CAP = 12
GROUND_SPACE_TOL = 1e-9
POLY_DEGREE_CAP = 400


def zero_state(n: int) -> np.ndarray:
    if n > STATEVECTOR_CAP:
        raise SizeError(f"statevector capped at {STATEVECTOR_CAP} qubits, got {n}")
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1.0
    return psi


def basis_state(bits: Sequence[int], n: int | None = None) -> np.ndarray:
    bits = [int(b) & 1 for b in bits]
    n = len(bits) if n is None else n
    psi = zero_state(n)
    idx = 0
    for b in bits:
        idx = (idx << 1) | b
    psi[0] = 0.0
    psi[idx] = 1.0
    return psi


def apply_gate_matrix(psi: np.ndarray, mat: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """Apply a matrix on `qubits` to the statevector via tensor contraction."""
    k = len(qubits)
    tensor = psi.reshape((2,) * n)
    mat_t = mat.reshape((2,) * (2 * k))
    moved = np.tensordot(mat_t, tensor, axes=(list(range(k, 2 * k)), list(qubits)))
    return np.moveaxis(moved, range(k), qubits).reshape(-1)


def run_circuit(circ: Circuit, init: np.ndarray | None = None) -> np.ndarray:
    if circ.n > STATEVECTOR_CAP:
        raise SizeError(f"statevector capped at {STATEVECTOR_CAP} qubits, got {circ.n}")
    psi = zero_state(circ.n) if init is None else np.asarray(init, dtype=complex).copy()
    if psi.shape != (2**circ.n,):
        raise DimensionMismatch(f"initial state has dimension {psi.shape}, circuit needs {2**circ.n}")
    for g in circ.gates:
        psi = apply_gate_matrix(psi, gate_matrix(g), g.qubits, circ.n)
    return psi


def ham_matvec(h: LocalHamiltonian, psi: np.ndarray) -> np.ndarray:
    """H|psi> applied term by term, pairwise-summed in canonical term order."""
    parts = []
    for t in h.terms:
        parts.append(t.weight * apply_gate_matrix(psi, t.matrix, t.support, h.n))
    if not parts:
        return np.zeros_like(psi)
    return pairwise_sum(parts)


def pairwise_sum(parts: list[np.ndarray]) -> np.ndarray:
    """Reduction with a fixed tree shape so results are bit-stable."""
    work = list(parts)
    while len(work) > 1:
        nxt = []
        for i in range(0, len(work) - 1, 2):
            nxt.append(work[i] + work[i + 1])
        if len(work) % 2:
            nxt.append(work[-1])
        work = nxt
    return work[0]


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # column i <-> eigenvalues[i]
    ground_projector: np.ndarray

    @property
    def lambda0(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def ground_degeneracy(self) -> int:
        return int(np.sum(self.eigenvalues <= self.eigenvalues[0] + GROUND_SPACE_TOL))


def diagonalize(h: LocalHamiltonian | np.ndarray) -> SpectralDecomposition:
    if isinstance(h, LocalHamiltonian):
        if h.n > DIAG_CAP:
            raise SizeError(f"diagonalization capped at {DIAG_CAP} qubits, got {h.n}")
        mat = h.dense()
    else:
        mat = np.asarray(h, dtype=complex)
        if mat.shape[0] > 2**DIAG_CAP:
            raise SizeError("diagonalization capped at 12 qubits")
    evals, evecs = np.linalg.eigh(mat)
    gs = evecs[:, evals <= evals[0] + GROUND_SPACE_TOL]
    return SpectralDecomposition(evals, evecs, gs @ gs.conj().T)


def low_energy_projector(dec: SpectralDecomposition, alpha: float) -> np.ndarray:
    sel = dec.eigenvectors[:, dec.eigenvalues <= alpha]
    return sel @ sel.conj().T


def poly_of_matrix(dec: SpectralDecomposition, coeffs: Sequence[float]) -> np.ndarray:
    """sum_i P(lambda_i) |psi_i><psi_i| with P given by monomial coeffs."""
    if len(coeffs) - 1 > POLY_DEGREE_CAP:
        raise ValidationError(f"polynomial degree capped at {POLY_DEGREE_CAP}")
    vals = np.polynomial.polynomial.polyval(dec.eigenvalues, np.asarray(coeffs, dtype=float))
    return (dec.eigenvectors * vals) @ dec.eigenvectors.conj().T


def func_of_matrix(dec: SpectralDecomposition, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Same as poly_of_matrix but with an arbitrary scalar function."""
    vals = np.asarray(fn(dec.eigenvalues), dtype=float)
    return (dec.eigenvectors * vals) @ dec.eigenvectors.conj().T


def fidelity(u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u).reshape(-1)
    v = np.asarray(v).reshape(-1)
    if u.shape != v.shape:
        raise DimensionMismatch(f"state dimensions differ: {u.shape} vs {v.shape}")
    return float(abs(np.vdot(u, v)) ** 2)


def marginal_probs(psi: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """Born probabilities of measuring `qubits`; index bit j <-> qubits[j] (qubits[0] most significant)."""
    tensor = np.abs(psi.reshape((2,) * n)) ** 2
    other = tuple(q for q in range(n) if q not in set(qubits))
    summed = tensor.sum(axis=other) if other else tensor
    sq = sorted(qubits)  # axes remaining after the sum, in this order
    summed = summed.transpose([sq.index(q) for q in qubits])
    return summed.reshape(-1)


def collapse(psi: np.ndarray, qubits: Sequence[int], outcome_bits: Sequence[int], n: int) -> tuple[np.ndarray, float]:
    """Project onto the outcome of measuring `qubits`; returns (normalized state, probability)."""
    tensor = psi.reshape((2,) * n).copy()
    idx = [slice(None)] * n
    for q, b in zip(qubits, outcome_bits):
        idx[q] = 1 - int(b)  # zero out the non-observed branch
        tensor[tuple(idx)] = 0.0
        idx[q] = slice(None)
    flat = tensor.reshape(-1)
    p = float(np.vdot(flat, flat).real)
    if p <= 0.0:
        return flat, 0.0
    return flat / np.sqrt(p), p
