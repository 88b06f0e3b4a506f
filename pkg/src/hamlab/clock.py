"""Circuit-to-Hamiltonian reduction with a unary clock and small penalties.

A verifier circuit (input, witness, ancilla registers; qubit 0 is the
output) becomes H_in + H_clock + H_prop + eps*H_out whose low-energy
structure encodes acceptance. Includes the witness-copy trick that makes
the acceptance operator diagonal, the pre-idled block instance with its
flagged NO branch, and numerical certification of the energy claims.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import dense
from .circuits import Circuit, Gate, circuit_from_json, circuit_to_json, gate_matrix
from .errors import (
    ParseError,
    PenaltyTooLarge,
    SizeError,
    ValidationError,
)
from .hamiltonian import LocalHamiltonian, LocalTerm, expand_on_support
from .states import SubsetState

ALLOWED_GATES = frozenset({"h", "x", "t", "cnot", "cx", "toffoli", "ccx", "i"})
PENALTY_C = 1.0  # eps must stay below PENALTY_C / T^3
CLOCK_CAP = 14  # data + clock qubits
_P0 = np.diag([1.0, 0.0]).astype(complex)
_P1 = np.diag([0.0, 1.0]).astype(complex)


@dataclass(frozen=True)
class VerifierCircuit:
    """Gate list over [input | witness | ancilla]; qubit 0 is the output."""

    n_input: int
    n_witness: int
    n_ancilla: int
    gates: tuple[Gate, ...]

    def __post_init__(self):
        if min(self.n_input, self.n_witness, self.n_ancilla) < 0:
            raise ValidationError("register sizes must be nonnegative")
        if self.total == 0:
            raise ValidationError("need at least one qubit")
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if g.name not in ALLOWED_GATES:
                raise ValidationError(f"gate {g.name!r} outside the verifier set")
            if any(q >= self.total for q in g.qubits):
                raise ValidationError(f"gate {g} outside declared registers")

    @property
    def total(self) -> int:
        return self.n_input + self.n_witness + self.n_ancilla

    @property
    def t(self) -> int:
        return len(self.gates)

    @property
    def input_qubits(self) -> range:
        return range(0, self.n_input)

    @property
    def witness_qubits(self) -> range:
        return range(self.n_input, self.n_input + self.n_witness)

    @property
    def ancilla_qubits(self) -> range:
        return range(self.n_input + self.n_witness, self.total)

    def circuit(self) -> Circuit:
        return Circuit(self.total, self.gates)


def verifier_to_json(vc: VerifierCircuit) -> dict:
    return circuit_to_json(
        vc.circuit(),
        registers={
            "input": vc.n_input,
            "witness": vc.n_witness,
            "ancilla": vc.n_ancilla,
        },
    )


def verifier_from_json(doc: dict) -> VerifierCircuit:
    circ, regs = circuit_from_json(doc)
    if not regs:
        raise ParseError("verifier circuit file needs a registers block")
    try:
        n_in, n_w, n_anc = int(regs["input"]), int(regs["witness"]), int(regs["ancilla"])
    except KeyError as exc:
        raise ParseError(f"registers block missing {exc}") from exc
    if n_in + n_w + n_anc != circ.n:
        raise ParseError(
            f"registers sum {n_in + n_w + n_anc} does not match n={circ.n}"
        )
    return VerifierCircuit(n_in, n_w, n_anc, circ.gates)


def _bits(value, width: int, label: str) -> tuple[int, ...]:
    if isinstance(value, str):
        value = [int(c) for c in value]
    out = tuple(int(b) for b in value)
    if len(out) != width or any(b not in (0, 1) for b in out):
        raise ValidationError(f"{label} must be {width} bits, got {value!r}")
    return out


def _data_state(vc: VerifierCircuit, input_x, witness) -> np.ndarray:
    """|x>|w>|0...0> with a basis-string or vector witness."""
    xs = _bits(input_x, vc.n_input, "input")
    ex = np.zeros(2**vc.n_input, dtype=complex)
    ex[int("0" + "".join(map(str, xs)), 2)] = 1.0
    if isinstance(witness, np.ndarray) and witness.dtype != object and witness.ndim == 1 \
            and witness.shape[0] == 2**vc.n_witness and vc.n_witness > 0:
        wv = witness.astype(complex)
        nrm = np.linalg.norm(wv)
        if abs(nrm - 1.0) > 1e-9:
            raise ValidationError("witness vector must be normalized")
    else:
        ws = _bits(witness, vc.n_witness, "witness")
        wv = np.zeros(2**vc.n_witness, dtype=complex)
        wv[int("0" + "".join(map(str, ws)), 2)] = 1.0
    e0 = np.zeros(2**vc.n_ancilla, dtype=complex)
    e0[0] = 1.0
    return np.kron(np.kron(ex, wv), e0)


def accept_probability(vc: VerifierCircuit, input_x, witness) -> float:
    """P(output qubit = 1) after the circuit, exact statevector simulation."""
    if vc.total > dense.STATEVECTOR_CAP:
        raise SizeError(f"{vc.total} qubits exceed cap {dense.STATEVECTOR_CAP}")
    psi = _data_state(vc, input_x, witness)
    for g in vc.gates:
        psi = dense.apply_gate_matrix(psi, gate_matrix(g), g.qubits, vc.total)
    return float(dense.marginal_probs(psi, [0], vc.total)[1])


def simulate_accept_prob(vc: VerifierCircuit, input_x, witness) -> float:
    return accept_probability(vc, input_x, witness)


def mw_operator(vc: VerifierCircuit, input_x) -> np.ndarray:
    """Acceptance operator on the witness register: Q[w',w] = <phi_w'|P_1|phi_w>."""
    if vc.total > dense.STATEVECTOR_CAP:
        raise SizeError(f"{vc.total} qubits exceed cap {dense.STATEVECTOR_CAP}")
    dim_w = 2**vc.n_witness
    cols = np.empty((2**vc.total, dim_w), dtype=complex)
    for w in range(dim_w):
        bits = [(w >> (vc.n_witness - 1 - j)) & 1 for j in range(vc.n_witness)]
        psi = _data_state(vc, input_x, bits)
        for g in vc.gates:
            psi = dense.apply_gate_matrix(psi, gate_matrix(g), g.qubits, vc.total)
        cols[:, w] = psi
    # rows where the output qubit reads 1
    half = 2 ** (vc.total - 1)
    top = cols[half:, :]  # qubit 0 is the most significant index bit
    return top.conj().T @ top


def apply_cnot_trick(vc: VerifierCircuit) -> VerifierCircuit:
    """Prepend witness-copy CNOTs into fresh ancillas; Q becomes diagonal."""
    copies = range(vc.total, vc.total + vc.n_witness)
    prefix = tuple(
        Gate("cnot", (w, c), ()) for w, c in zip(vc.witness_qubits, copies)
    )
    return VerifierCircuit(
        vc.n_input, vc.n_witness, vc.n_ancilla + vc.n_witness, prefix + vc.gates
    )


# -- clock construction -----------------------------------------------------


def _unary_index(t: int, big_t: int) -> int:
    """Clock basis index of |1^t 0^(T-t)> on T clock qubits."""
    out = 0
    for j in range(t):
        out |= 1 << (big_t - 1 - j)
    return out


@dataclass(frozen=True)
class ClockInstance:
    circ: VerifierCircuit
    input_x: tuple[int, ...]
    eps: float
    h_in: LocalHamiltonian
    h_clock: LocalHamiltonian
    h_prop: LocalHamiltonian
    h_out: LocalHamiltonian
    h_fk: LocalHamiltonian
    certificate: dict = field(compare=False)

    @property
    def t(self) -> int:
        return self.circ.t

    @property
    def n(self) -> int:
        return self.h_fk.n

    @property
    def data_qubits(self) -> range:
        return range(self.circ.total)

    @property
    def clock_qubits(self) -> range:
        return range(self.circ.total, self.circ.total + self.t)


def _prop_term(vc: VerifierCircuit, t: int, clock0: int) -> LocalTerm:
    """Propagation projector for step t (1-based) on clock window + gate qubits."""
    big_t = vc.t
    gate = vc.gates[t - 1]
    if t == 1:
        window = [clock0] if big_t == 1 else [clock0, clock0 + 1]
        a, b = (0, 1) if big_t == 1 else (0b00, 0b10)
    elif t == big_t:
        window = [clock0 + big_t - 2, clock0 + big_t - 1]
        a, b = 0b10, 0b11
    else:
        window = [clock0 + t - 2, clock0 + t - 1, clock0 + t]
        a, b = 0b100, 0b110
    cdim = 2 ** len(window)
    paa = np.zeros((cdim, cdim), dtype=complex)
    pbb = np.zeros((cdim, cdim), dtype=complex)
    pba = np.zeros((cdim, cdim), dtype=complex)
    paa[a, a] = pbb[b, b] = pba[b, a] = 1.0
    if gate.name == "i":
        mat = 0.5 * (paa + pbb - pba - pba.conj().T)
        return LocalTerm(support=tuple(window), weight=1.0, matrix=mat)
    gq = sorted(gate.qubits)
    u = expand_on_support(gate_matrix(gate), list(gate.qubits), gq)
    eye = np.eye(u.shape[0], dtype=complex)
    mat = 0.5 * (
        np.kron(eye, paa + pbb) - np.kron(u, pba) - np.kron(u.conj().T, pba.conj().T)
    )
    return LocalTerm(support=tuple(gq) + tuple(window), weight=1.0, matrix=mat)


def build_clock(
    vc: VerifierCircuit,
    eps: float,
    input_x=None,
    penalty_c: float = PENALTY_C,
) -> ClockInstance:
    """Assemble H_in + H_clock + H_prop + eps*H_out over data + unary clock."""
    big_t = vc.t
    if big_t < 1:
        raise ValidationError("circuit needs at least one gate (identities count)")
    if eps <= 0:
        raise ValidationError(f"penalty eps must be positive, got {eps}")
    if eps > penalty_c / big_t**3:
        raise PenaltyTooLarge(
            f"eps={eps} exceeds {penalty_c}/T^3 = {penalty_c / big_t**3} at T={big_t}"
        )
    n = vc.total + big_t
    if n > CLOCK_CAP:
        raise SizeError(f"data+clock = {n} qubits exceeds cap {CLOCK_CAP}")
    xs = _bits(input_x, vc.n_input, "input") if input_x is not None else (0,) * vc.n_input
    clock0 = vc.total

    in_terms = []
    for j in vc.input_qubits:
        wrong = _P0 if xs[j] else _P1
        in_terms.append(
            LocalTerm(support=(j, clock0), weight=1.0, matrix=np.kron(wrong, _P0))
        )
    for j in vc.ancilla_qubits:
        in_terms.append(
            LocalTerm(support=(j, clock0), weight=1.0, matrix=np.kron(_P1, _P0))
        )
    h_in = LocalHamiltonian(n, in_terms)

    clock_terms = [
        LocalTerm(
            support=(clock0 + j, clock0 + j + 1),
            weight=1.0,
            matrix=np.kron(_P0, _P1),
        )
        for j in range(big_t - 1)
    ]
    h_clock = LocalHamiltonian(n, clock_terms)

    h_prop = LocalHamiltonian(n, [_prop_term(vc, t, clock0) for t in range(1, big_t + 1)])

    out_term = LocalTerm(
        support=(0, clock0 + big_t - 1), weight=1.0, matrix=np.kron(_P0, _P1)
    )
    h_out = LocalHamiltonian(n, [out_term])

    fk_terms = list(h_in.terms) + list(h_clock.terms) + list(h_prop.terms)
    fk_terms.append(LocalTerm(support=out_term.support, weight=eps, matrix=out_term.matrix))
    h_fk = LocalHamiltonian(n, fk_terms)

    inst = ClockInstance(
        circ=vc,
        input_x=xs,
        eps=eps,
        h_in=h_in,
        h_clock=h_clock,
        h_prop=h_prop,
        h_out=h_out,
        h_fk=h_fk,
        certificate={},
    )
    inst.certificate.update(_certify(inst))
    return inst


def _certify(inst: ClockInstance) -> dict:
    """Numerical checks of the construction's stated invariants."""
    psd_floor = 0.0
    for ham in (inst.h_in, inst.h_clock, inst.h_prop, inst.h_out):
        for term in ham.terms:
            psd_floor = min(psd_floor, float(np.linalg.eigvalsh(term.matrix)[0]))
    h0_terms = list(inst.h_in.terms) + list(inst.h_clock.terms) + list(inst.h_prop.terms)
    h0 = LocalHamiltonian(inst.n, h0_terms)
    rng = np.random.default_rng(0)
    worst_null = 0.0
    worst_energy = 0.0
    witnesses = [(0,) * inst.circ.n_witness]
    if inst.circ.n_witness:
        v = rng.normal(size=2**inst.circ.n_witness) + 1j * rng.normal(
            size=2**inst.circ.n_witness
        )
        witnesses.append(v / np.linalg.norm(v))
    for w in witnesses:
        eta = history_state(inst, w)
        worst_null = max(worst_null, float(np.linalg.norm(dense.ham_matvec(h0, eta))))
        p = accept_probability(inst.circ, inst.input_x, w)
        energy = float(np.vdot(eta, dense.ham_matvec(inst.h_fk, eta)).real)
        law = inst.eps * (1.0 - p) / (inst.t + 1)
        worst_energy = max(worst_energy, abs(energy - law))
    cert = {
        "psd_floor": psd_floor,
        "null_residual": worst_null,
        "energy_law_residual": worst_energy,
    }
    if psd_floor < -1e-10 or worst_null > 1e-9 or worst_energy > 1e-9:
        raise ValidationError(f"clock certification failed: {cert}")
    return cert


def history_state(inst: ClockInstance, witness) -> np.ndarray:
    """(1/sqrt(T+1)) sum_t U_t...U_1 |x,w,0> |unary(t)>."""
    vc = inst.circ
    big_t = inst.t
    psi = _data_state(vc, inst.input_x, witness)
    out = np.zeros((2**vc.total, 2**big_t), dtype=complex)
    scale = 1.0 / np.sqrt(big_t + 1)
    out[:, _unary_index(0, big_t)] = psi * scale
    for t, g in enumerate(vc.gates, start=1):
        psi = dense.apply_gate_matrix(psi, gate_matrix(g), g.qubits, vc.total)
        out[:, _unary_index(t, big_t)] = psi * scale
    return out.reshape(-1)


# -- flagged YES/NO block ----------------------------------------------------


@dataclass(frozen=True)
class BlockInstance:
    clock: ClockInstance
    t_tilde: int
    idle_n: int
    b_offset: float
    witness: tuple[int, ...]
    h_yes: LocalHamiltonian
    h_no: LocalHamiltonian
    h: LocalHamiltonian
    u_yes: SubsetState
    u_no: SubsetState

    @property
    def flag(self) -> int:
        return self.h_yes.n


def build_block_instance(
    clock: ClockInstance,
    b_offset: float | None = None,
    idle_N: int = 0,
    witness=None,
    eps: float | None = None,
) -> BlockInstance:
    """Flagged pair: pre-idled H_FK on flag 0, the gapped diagonal H_no on flag 1."""
    if idle_N < 0:
        raise ValidationError(f"idle_N must be >= 0, got {idle_N}")
    t_tilde = clock.t
    b = 0.1 / t_tilde**7 if b_offset is None else float(b_offset)
    if b <= 0:
        raise ValidationError(f"b_offset must be positive, got {b}")
    eps_eff = clock.eps if eps is None else float(eps)
    vc = clock.circ
    idles = tuple(Gate("i", (0,), ()) for _ in range(idle_N))
    idled = VerifierCircuit(
        vc.n_input, vc.n_witness, vc.n_ancilla, idles + vc.gates
    )
    iclock = build_clock(idled, eps_eff, input_x=clock.input_x)
    n_yes = iclock.n
    flag = n_yes
    n_tot = n_yes + 1

    h_yes = iclock.h_fk
    no_terms = [
        LocalTerm(support=(q,), weight=1.0, matrix=_P1.copy()) for q in range(n_yes)
    ]
    no_terms.append(LocalTerm(support=(0,), weight=b, matrix=np.eye(2, dtype=complex)))
    h_no = LocalHamiltonian(n_yes, no_terms)

    full = [
        LocalTerm(
            support=t.support + (flag,), weight=t.weight, matrix=np.kron(t.matrix, _P0)
        )
        for t in h_yes.terms
    ]
    for q in range(n_yes):
        full.append(
            LocalTerm(support=(q, flag), weight=1.0, matrix=np.kron(_P1, _P1))
        )
    full.append(LocalTerm(support=(flag,), weight=b, matrix=_P1.copy()))
    h = LocalHamiltonian(n_tot, full)

    ws = _bits(witness, vc.n_witness, "witness") if witness is not None else (0,) * vc.n_witness
    data_bits = list(clock.input_x) + list(ws) + [0] * vc.n_ancilla
    big_t = iclock.t
    members = []
    for t in range(max(idle_N, 1)):
        clock_bits = [1] * t + [0] * (big_t - t)
        members.append("".join(map(str, data_bits + clock_bits + [0])))
    u_yes = SubsetState(n_tot, members)
    u_no = SubsetState(n_tot, ["0" * n_yes + "1"])
    return BlockInstance(
        clock=iclock,
        t_tilde=t_tilde,
        idle_n=idle_N,
        b_offset=b,
        witness=ws,
        h_yes=h_yes,
        h_no=h_no,
        h=h,
        u_yes=u_yes,
        u_no=u_no,
    )


def verify_fidelity_chain(block: BlockInstance) -> dict:
    """Dense check of gap, guide overlaps, and the fidelity triangle bound."""
    h_yes = block.h_yes
    if h_yes.n > dense.DIAG_CAP:
        raise SizeError(f"n={h_yes.n} exceeds diagonalization cap {dense.DIAG_CAP}")
    dec = dense.diagonalize(h_yes)
    gs = dec.eigenvectors[:, 0]
    eta = history_state(block.clock, block.witness)
    u_full = block.u_yes.statevector()
    # strip the flag qubit (guide lives in the flag-0 half)
    u = u_full.reshape(-1, 2)[:, 0]
    f_u_gs = float(abs(np.vdot(u, gs)) ** 2)
    f_u_eta = float(abs(np.vdot(u, eta)) ** 2)
    f_eta_gs = float(abs(np.vdot(eta, gs)) ** 2)
    cos_ug = np.sqrt(f_u_gs)
    bound = np.sqrt(f_u_eta) * np.sqrt(f_eta_gs) - np.sqrt(
        max(0.0, (1 - f_u_eta) * (1 - f_eta_gs))
    )
    total_t = block.clock.t
    eps = block.clock.eps
    gap = float(dec.eigenvalues[dec.ground_degeneracy] - dec.eigenvalues[0])
    gap_leading = eps / (total_t + 1)
    k_fit = max(0.0, (gap_leading - gap) / (total_t**3 * eps**2))
    no_diag = np.real(np.diag(block.h_no.dense())) if block.h_no.n <= dense.DIAG_CAP else None
    report = {
        "lambda0_yes": float(dec.eigenvalues[0]),
        "gap_yes": gap,
        "gap_leading_term": gap_leading,
        "k_fit": k_fit,
        "overlap_guide_ground": f_u_gs,
        "overlap_guide_history": f_u_eta,
        "overlap_history_ground": f_eta_gs,
        "triangle_rhs": float(max(0.0, bound)),
        "triangle_pass": bool(cos_ug >= bound - 1e-12),
        "idle_n": block.idle_n,
        "t_tilde": block.t_tilde,
        "overlap_formula": block.idle_n / (block.idle_n + block.t_tilde + 1)
        if block.idle_n
        else 1.0 / (block.t_tilde + 1),
        "no_lambda0": float(no_diag.min()) if no_diag is not None else None,
        "b_offset": block.b_offset,
    }
    return report
