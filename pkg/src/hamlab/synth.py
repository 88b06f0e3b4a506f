"""Exact compilation of small unitaries into 1- and 2-qubit gates.

1- and 2-qubit unitaries are emitted verbatim. 3-qubit unitaries go through
a two-level (Givens) decomposition, Gray-code routing of each two-level
rotation onto a single bit, and the standard five-gate construction of a
doubly-controlled U from its square root. Every compilation is checked by
dense reconstruction before it is returned.
"""

from __future__ import annotations

import numpy as np

from .circuits import Circuit, Gate, gate_matrix, unitary_gate
from .errors import NumericalError, ValidationError
from .hamiltonian import embed_matrix

_TWO_LEVEL_TOL = 1e-14


def _sqrt_unitary(u: np.ndarray) -> np.ndarray:
    """Principal square root of a 2x2 unitary via eigendecomposition."""
    vals, vecs = np.linalg.eig(u)
    v = vecs @ np.diag(np.sqrt(vals.astype(complex))) @ vecs.conj().T
    if np.max(np.abs(v @ v - u)) > 1e-10:
        raise NumericalError("unitary square root reconstruction failed")
    return v


def _controlled_u(u2: np.ndarray, control: int, target: int) -> Gate:
    """Controlled-U as an explicit 4x4 unitary (control = first listed qubit)."""
    m = np.eye(4, dtype=complex)
    m[2:, 2:] = u2
    return unitary_gate(m, (control, target))


def _ccu_gates(u2: np.ndarray, c1: int, c2: int, target: int) -> list[Gate]:
    """Doubly-controlled U from CV/CX/CV*/CX/CV with V*V = U."""
    v = _sqrt_unitary(u2)
    vd = v.conj().T
    return [
        _controlled_u(v, c2, target),
        Gate("cnot", (c1, c2)),
        _controlled_u(vd, c2, target),
        Gate("cnot", (c1, c2)),
        _controlled_u(v, c1, target),
    ]


def _multi_controlled(u2: np.ndarray, controls: list[tuple[int, int]], target: int) -> list[Gate]:
    """U on target, conditioned on each (qubit, value) control. <= 2 controls."""
    pre: list[Gate] = []
    ctrl_qubits = []
    for q, val in controls:
        ctrl_qubits.append(q)
        if val == 0:
            pre.append(Gate("x", (q,)))
    if len(ctrl_qubits) == 0:
        core = [unitary_gate(u2, (target,))]
    elif len(ctrl_qubits) == 1:
        core = [_controlled_u(u2, ctrl_qubits[0], target)]
    elif len(ctrl_qubits) == 2:
        core = _ccu_gates(u2, ctrl_qubits[0], ctrl_qubits[1], target)
    else:
        raise ValidationError("more than 2 controls not supported")
    return pre + core + list(reversed(pre))


def _two_level_decompose(u: np.ndarray) -> list[tuple[int, int, np.ndarray]]:
    """Factor U = G_1 ... G_m with each G a two-level unitary on basis pair (i, j).

    Returned in application order: applying the listed operations one after
    another (first entry first) reproduces U.
    """
    m = u.astype(complex).copy()
    dim = m.shape[0]
    elim: list[tuple[int, int, np.ndarray]] = []
    for c in range(dim - 1):
        for r in range(dim - 1, c, -1):
            b = m[r, c]
            if abs(b) <= _TWO_LEVEL_TOL:
                continue
            a = m[c, c]
            nu = np.hypot(abs(a), abs(b))
            w = np.array([[np.conj(a), np.conj(b)], [-b, a]], dtype=complex) / nu
            rows = np.array([c, r])
            m[rows, :] = w @ m[rows, :]
            elim.append((c, r, w))
        m[c, c] = m[c, c] / abs(m[c, c])  # unit modulus up to rounding
    ops: list[tuple[int, int, np.ndarray]] = []
    # residual diagonal phases, applied first
    for j in range(dim - 1, -1, -1):
        phase = m[j, j]
        if abs(phase - 1.0) > _TWO_LEVEL_TOL:
            other = 0 if j != 0 else 1
            i, k = min(j, other), max(j, other)
            d = np.eye(2, dtype=complex)
            d[0 if j == i else 1, 0 if j == i else 1] = phase
            ops.append((i, k, d))
    for c, r, w in reversed(elim):
        ops.append((c, r, w.conj().T))
    return ops


def _gray_path(i: int, j: int, nq: int) -> list[int]:
    path = [i]
    cur = i
    for bit in range(nq - 1, -1, -1):  # flip high bits first
        mask = 1 << bit
        if (cur ^ j) & mask:
            cur ^= mask
            path.append(cur)
    return path


def _pair_gates(a: int, b: int, op: np.ndarray, qubits: tuple[int, ...]) -> list[Gate]:
    """Controlled op on the basis pair (a, b), which must differ in one bit."""
    nq = len(qubits)
    bitpos = (a ^ b).bit_length() - 1
    target = qubits[nq - 1 - bitpos]
    controls = []
    for other in range(nq):
        if other == nq - 1 - bitpos:
            continue
        controls.append((qubits[other], (a >> (nq - 1 - other)) & 1))
    x_mat = np.array([[0, 1], [1, 0]], dtype=complex)
    core = op if (a >> bitpos) & 1 == 0 else x_mat @ op @ x_mat
    return _multi_controlled(core, controls, target)


def _two_level_gates(i: int, j: int, w: np.ndarray, qubits: tuple[int, ...]) -> list[Gate]:
    """Route the two-level op on basis pair (i, j) to controlled gates.

    Gray-code transposition blocks walk i next to j; each block is an
    involution, so the walk is undone by replaying the blocks in reverse.
    """
    path = _gray_path(i, j, len(qubits))
    x_mat = np.array([[0, 1], [1, 0]], dtype=complex)
    blocks = [
        _pair_gates(path[t], path[t + 1], x_mat, qubits)
        for t in range(len(path) - 2)
    ]
    out: list[Gate] = [g for blk in blocks for g in blk]
    out.extend(_pair_gates(path[-2], path[-1], w, qubits))
    for blk in reversed(blocks):
        out.extend(blk)
    return out


def compile_unitary(u: np.ndarray, qubits: tuple[int, ...]) -> list[Gate]:
    """Compile a 1-, 2-, or 3-qubit unitary into <= 2-qubit gates, verified."""
    nq = len(qubits)
    dim = 2**nq
    u = np.asarray(u, dtype=complex)
    if u.shape != (dim, dim):
        raise ValidationError(f"matrix shape {u.shape} does not fit {nq} qubits")
    if np.max(np.abs(u @ u.conj().T - np.eye(dim))) > 1e-9:
        raise ValidationError("compile_unitary given a non-unitary matrix")
    if nq == 1:
        return [unitary_gate(u, qubits)]
    if nq == 2:
        return [unitary_gate(u, qubits)]
    if nq != 3:
        raise ValidationError("compile_unitary supports at most 3 qubits")
    gates: list[Gate] = []
    for i, j, w in _two_level_decompose(u):
        gates.extend(_two_level_gates(i, j, w, qubits))
    _verify(u, gates, qubits)
    return gates


def _verify(u: np.ndarray, gates: list[Gate], qubits: tuple[int, ...]) -> None:
    order = {q: pos for pos, q in enumerate(qubits)}
    nq = len(qubits)
    acc = np.eye(2**nq, dtype=complex)
    for g in gates:
        local = tuple(order[q] for q in g.qubits)
        acc = embed_matrix(gate_matrix(g), local, nq) @ acc
    err = np.max(np.abs(acc - u))
    if err > 1e-10:
        raise NumericalError(f"compiled circuit deviates from target by {err:.3e}")
