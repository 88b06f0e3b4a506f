"""Verifiers that read a classical proof at measured indices.

A verifier is a gate list with query points: at each one, designated
index qubits are measured, the addressed proof bit is injected into a
fresh target qubit, and the circuit continues. The final measurement of
qubit 0 accepts on outcome 1. This module simulates such verifiers,
compiles adaptive ones into non-adaptive transcripts, amplifies them by
parallel repetition, learns their query statistics by sampling, and
assembles the statistics into a certified diagonal Hamiltonian on the
proof bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import dense
from .circuits import Gate, gate_from_json, gate_to_json
from .errors import BudgetExceeded, ParseError, SizeError, ValidationError
from .hamiltonian import DiagonalHamiltonian, LocalTerm

OMEGA_CAP = 10_000
SAMPLE_CAP = 10**13  # per-z run count above this is not simulable
BRANCH_TOL = 1e-14
DIXIE_C0 = 2.0  # additive O(ceil(1/gamma)) constant in the collection bound
DEFAULT_C_P = 4.0  # distribution-learning sample constant
DEFAULT_C_LAM = 4.0  # per-tuple acceptance-estimate sample constant


@dataclass(frozen=True)
class QueryPoint:
    """Measure `index_register` after `after_gate` gates; write the proof bit to `proof_bit_target`."""

    after_gate: int
    index_register: tuple[int, ...]
    proof_bit_target: int

    def __post_init__(self):
        object.__setattr__(self, "index_register", tuple(int(q) for q in self.index_register))
        if not self.index_register:
            raise ValidationError("index register must be nonempty")
        if len(set(self.index_register)) != len(self.index_register):
            raise ValidationError("index register has repeated qubits")
        if self.after_gate < 0:
            raise ValidationError("after_gate must be >= 0")


@dataclass(frozen=True)
class QcpcpVerifier:
    """Quantum circuit interleaved with proof queries; accepts on qubit 0 = 1."""

    n: int
    gates: tuple[Gate, ...]
    query_points: tuple[QueryPoint, ...]
    proof_len: int

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "query_points", tuple(self.query_points))
        if self.n < 1:
            raise ValidationError("verifier needs at least one qubit")
        if self.proof_len < 1:
            raise ValidationError("proof length must be >= 1")
        for g in self.gates:
            if any(q >= self.n for q in g.qubits):
                raise ValidationError(f"gate {g} outside n={self.n}")
        prev = 0
        for qp in self.query_points:
            if qp.after_gate < prev or qp.after_gate > len(self.gates):
                raise ValidationError("query points must sit at nondecreasing gate offsets")
            prev = qp.after_gate
            if max(qp.index_register) >= self.n or qp.proof_bit_target >= self.n:
                raise ValidationError(f"query point {qp} outside n={self.n}")

    @property
    def q(self) -> int:
        return len(self.query_points)

    @property
    def omega_size(self) -> int:
        """Upper bound on distinct index tuples: the index registers' full range."""
        size = 1
        for qp in self.query_points:
            size *= 2 ** len(qp.index_register)
        return size


@dataclass(frozen=True)
class RepeatedVerifier:
    """t independent copies combined by majority vote."""

    base: QcpcpVerifier
    t: int

    def __post_init__(self):
        if self.t < 1:
            raise ValidationError("repetition count must be >= 1")

    @property
    def q(self) -> int:
        return self.base.q * self.t

    @property
    def proof_len(self) -> int:
        return self.base.proof_len


def verifier_to_json(v: QcpcpVerifier) -> dict:
    return {
        "n": v.n,
        "proof_len": v.proof_len,
        "gates": [gate_to_json(g) for g in v.gates],
        "query_points": [
            {
                "after_gate": qp.after_gate,
                "index_register": list(qp.index_register),
                "proof_bit_target": qp.proof_bit_target,
            }
            for qp in v.query_points
        ],
    }


def verifier_from_json(doc: dict) -> QcpcpVerifier:
    if not isinstance(doc, dict):
        raise ParseError("verifier document must be an object")
    try:
        n = int(doc["n"])
        proof_len = int(doc["proof_len"])
        gates = tuple(gate_from_json(g) for g in doc["gates"])
        qps = tuple(
            QueryPoint(
                int(qp["after_gate"]),
                tuple(int(q) for q in qp["index_register"]),
                int(qp["proof_bit_target"]),
            )
            for qp in doc["query_points"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"verifier document: {exc}") from exc
    return QcpcpVerifier(n, gates, qps, proof_len)


@dataclass(frozen=True)
class RunRecord:
    accept: bool
    indices: tuple[int, ...]
    injected: tuple[int, ...]
    invalid_index: bool
    sub_records: tuple["RunRecord", ...] = ()


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        raise ValidationError("a seed is required for randomized execution")
    return np.random.default_rng(seed)


def run_rng(root_seed: int, counter: int) -> np.random.Generator:
    """Per-run generator derived from the root seed by a counting scheme."""
    return np.random.default_rng((int(root_seed), int(counter)))


def _proof_bits(proof, length: int) -> tuple[int, ...]:
    if isinstance(proof, str):
        proof = [int(c) for c in proof]
    bits = tuple(int(b) for b in proof)
    if len(bits) != length or any(b not in (0, 1) for b in bits):
        raise ValidationError(f"proof must be {length} bits")
    return bits


def _measure_register(psi, register, n, rng):
    probs = dense.marginal_probs(psi, register, n)
    outcome = int(rng.choice(len(probs), p=probs / probs.sum()))
    bits = [(outcome >> (len(register) - 1 - j)) & 1 for j in range(len(register))]
    post, _ = dense.collapse(psi, register, bits, n)
    return outcome, post


def _inject_bit(psi, target, bit, n):
    p1 = float(dense.marginal_probs(psi, [target], n)[1])
    if p1 > 1e-9:
        raise ValidationError(
            f"proof bit target qubit {target} is not fresh (P(1) = {p1:.3g})"
        )
    if bit:
        from .circuits import FIXED_GATES

        psi = dense.apply_gate_matrix(psi, FIXED_GATES["x"], [target], n)
    return psi


def run_verifier(v, proof=None, seed=None, fake_bits=None) -> RunRecord:
    """One protocol execution; returns accept/reject plus the queried indices.

    With `fake_bits` the injected values come from that string and the
    proof is never read (the proof argument may be omitted).
    """
    rng = _rng(seed)
    if isinstance(v, RepeatedVerifier):
        subs = tuple(
            run_verifier(v.base, proof=proof, seed=child, fake_bits=fake_bits)
            for child in rng.spawn(v.t)
        )
        votes = sum(r.accept for r in subs)
        return RunRecord(
            accept=votes * 2 > v.t,
            indices=tuple(i for r in subs for i in r.indices),
            injected=tuple(b for r in subs for b in r.injected),
            invalid_index=any(r.invalid_index for r in subs),
            sub_records=subs,
        )
    if v.n > dense.STATEVECTOR_CAP:
        raise SizeError(f"{v.n} qubits exceed cap {dense.STATEVECTOR_CAP}")
    if v.q > 0 and proof is None and fake_bits is None:
        raise ValidationError("provide a proof or fake bits for a querying verifier")
    bits = _proof_bits(proof, v.proof_len) if proof is not None else None
    fakes = None
    if fake_bits is not None:
        fakes = tuple(int(b) for b in fake_bits)
        if len(fakes) != v.q or any(b not in (0, 1) for b in fakes):
            raise ValidationError(f"fake bits must be {v.q} bits")

    psi = dense.zero_state(v.n)
    cursor = 0
    indices: list[int] = []
    injected: list[int] = []
    for k, qp in enumerate(v.query_points):
        for g in v.gates[cursor : qp.after_gate]:
            psi = dense.apply_gate_matrix(psi, _gate_mat(g), g.qubits, v.n)
        cursor = qp.after_gate
        outcome, psi = _measure_register(psi, qp.index_register, v.n, rng)
        indices.append(outcome)
        if outcome >= v.proof_len:
            # out-of-range address: automatic reject
            return RunRecord(False, tuple(indices), tuple(injected), True)
        bit = fakes[k] if fakes is not None else bits[outcome]
        injected.append(bit)
        psi = _inject_bit(psi, qp.proof_bit_target, bit, v.n)
    for g in v.gates[cursor:]:
        psi = dense.apply_gate_matrix(psi, _gate_mat(g), g.qubits, v.n)
    p_acc = float(dense.marginal_probs(psi, [0], v.n)[1])
    accept = bool(rng.random() < p_acc)
    return RunRecord(accept, tuple(indices), tuple(injected), False)


def _gate_mat(g: Gate) -> np.ndarray:
    from .circuits import gate_matrix

    return gate_matrix(g)


# -- exact branch statistics --------------------------------------------------


def _branch_tree(v: QcpcpVerifier, inject):
    """All (indices, invalid, probability, accept_prob) branches.

    `inject(k, indices)` supplies the bit written at query k given the
    measured index outcomes so far.
    """
    out = []

    def rec(psi, cursor, k, weight, indices):
        if k == len(v.query_points):
            for g in v.gates[cursor:]:
                psi = dense.apply_gate_matrix(psi, _gate_mat(g), g.qubits, v.n)
            p_acc = float(dense.marginal_probs(psi, [0], v.n)[1])
            out.append((tuple(indices), False, weight, p_acc))
            return
        qp = v.query_points[k]
        for g in v.gates[cursor : qp.after_gate]:
            psi = dense.apply_gate_matrix(psi, _gate_mat(g), g.qubits, v.n)
        probs = dense.marginal_probs(psi, qp.index_register, v.n)
        for outcome, p in enumerate(probs):
            if p <= BRANCH_TOL:
                continue
            bits = [
                (outcome >> (len(qp.index_register) - 1 - j)) & 1
                for j in range(len(qp.index_register))
            ]
            post, _ = dense.collapse(psi, qp.index_register, bits, v.n)
            nxt = indices + [outcome]
            if outcome >= v.proof_len:
                out.append((tuple(nxt), True, weight * float(p), 0.0))
                continue
            bit = inject(k, nxt)
            post = _inject_bit(post, qp.proof_bit_target, bit, v.n)
            rec(post, qp.after_gate, k + 1, weight * float(p), nxt)

    if v.n > dense.STATEVECTOR_CAP:
        raise SizeError(f"{v.n} qubits exceed cap {dense.STATEVECTOR_CAP}")
    rec(dense.zero_state(v.n), 0, 0, 1.0, [])
    return out


def exact_acceptance(v: QcpcpVerifier, proof) -> float:
    """P[accept | proof], exact over all measurement branches."""
    bits = _proof_bits(proof, v.proof_len)
    branches = _branch_tree(v, lambda k, idx: bits[idx[-1]])
    return float(sum(w * p for _, _, w, p in branches))


@dataclass(frozen=True)
class QueryStatistics:
    """Index-tuple distribution and per-tuple acceptance estimates.

    p_tilde maps index tuples to probability estimates; lam_tilde maps
    (tuple, injected bits) to acceptance estimates. Tuples flagged in
    invalid_tuples hit an out-of-range address (auto-reject, lambda 0);
    pairs in undefined_lam were never observed and default to 0.
    """

    p_tilde: dict
    lam_tilde: dict
    gamma: float
    eps0: float
    eps1: float
    delta: float
    t_per_z: int
    q: int
    proof_len: int
    omega_size: int
    invalid_tuples: tuple = ()
    undefined_lam: tuple = ()
    constants: dict = field(default_factory=dict)
    exact: bool = False

    def __post_init__(self):
        total = 0.0
        for key, p in self.p_tilde.items():
            if p < 0:
                raise ValidationError(f"negative probability estimate at {key}")
            total += p
        slack = self.q * self.eps0 * self.omega_size
        if total > 1.0 + slack + 1e-9:
            raise ValidationError(
                f"estimates sum to {total}, above the sub-distribution bound 1 + {slack}"
            )
        for key, lam in self.lam_tilde.items():
            if not (0.0 <= lam <= 1.0 + 1e-12):
                raise ValidationError(f"acceptance estimate {lam} at {key} outside [0, 1]")

    @property
    def total_mass(self) -> float:
        return float(sum(self.p_tilde.values()))


def exact_statistics(v: QcpcpVerifier) -> QueryStatistics:
    """Ground-truth statistics from statevector marginals (no sampling)."""
    if v.omega_size > OMEGA_CAP:
        raise BudgetExceeded(f"index space {v.omega_size} exceeds cap {OMEGA_CAP}")
    p: dict = {}
    lam: dict = {}
    invalid = set()
    zs = [tuple((z >> (v.q - 1 - k)) & 1 for k in range(v.q)) for z in range(2**v.q)]
    for z in zs:
        branches = _branch_tree(v, lambda k, idx: z[k])
        mass: dict = {}
        acc: dict = {}
        for key, inv, w, pa in branches:
            mass[key] = mass.get(key, 0.0) + w
            acc[key] = acc.get(key, 0.0) + w * pa
            if inv:
                invalid.add(key)
        for key, w in mass.items():
            p[key] = p.get(key, 0.0) + w / len(zs)
            if key not in invalid:
                lam[(key, z)] = acc[key] / w if w > 0 else 0.0
    return QueryStatistics(
        p_tilde=p,
        lam_tilde=lam,
        gamma=0.0,
        eps0=0.0,
        eps1=0.0,
        delta=0.0,
        t_per_z=0,
        q=v.q,
        proof_len=v.proof_len,
        omega_size=v.omega_size,
        invalid_tuples=tuple(sorted(invalid)),
        exact=True,
    )


def sample_count(
    q: int,
    omega_size: int,
    gamma: float,
    eps0: float,
    eps1: float,
    delta: float,
    c_p: float = DEFAULT_C_P,
    c_lam: float = DEFAULT_C_LAM,
) -> int:
    """Per-z run count: max of the distribution-learning and collection branches."""
    ceil_g = math.ceil(1.0 / gamma)
    delta0 = delta / 4.0
    delta1 = delta / (ceil_g * 2 ** (q + 2))
    delta_lam = delta / 2 ** (q + 2)
    branch_p = c_p * (omega_size + math.log(1.0 / delta0)) / eps0**2
    copies = c_lam * math.log(1.0 / delta1) / eps1**2
    # degenerate lnln region (ceil <= e) floored at 1
    lnln = math.log(math.log(ceil_g)) if ceil_g >= 3 else 1.0
    draws = (
        ceil_g * math.log(ceil_g)
        + (copies - 1.0) * ceil_g * lnln
        + DIXIE_C0 * ceil_g
    )
    branch_lam = (2**q / delta_lam) * draws
    need = max(branch_p, branch_lam)
    if not math.isfinite(need) or need > SAMPLE_CAP:
        raise BudgetExceeded(f"required {need:.3g} runs per injected string, cap {SAMPLE_CAP:.0e}")
    return int(math.ceil(need))


def learn_statistics(
    v: QcpcpVerifier,
    gamma: float,
    eps0: float,
    eps1: float,
    delta: float,
    seed,
    c_p: float = DEFAULT_C_P,
    c_lam: float = DEFAULT_C_LAM,
) -> QueryStatistics:
    """Sample the verifier under every injected string and tabulate estimates.

    Runs are iid draws from a finite outcome distribution, so each batch
    of T runs is drawn as one multinomial count vector over the exact
    branch distribution; the law is identical to running one by one.
    """
    if not (0.0 < gamma <= 1.0):
        raise ValidationError(f"gamma must be in (0, 1], got {gamma}")
    for name, val in (("eps0", eps0), ("eps1", eps1), ("delta", delta)):
        if not (0.0 < val < 1.0):
            raise ValidationError(f"{name} must be in (0, 1), got {val}")
    if v.omega_size > OMEGA_CAP:
        raise BudgetExceeded(f"index space {v.omega_size} exceeds cap {OMEGA_CAP}")
    root = int(seed)
    t_runs = sample_count(v.q, v.omega_size, gamma, eps0, eps1, delta, c_p, c_lam)

    zs = [tuple((z >> (v.q - 1 - k)) & 1 for k in range(v.q)) for z in range(2**v.q)]
    counts: dict = {}
    accepts: dict = {}
    invalid = set()
    for zi, z in enumerate(zs):
        branches = _branch_tree(v, lambda k, idx: z[k])
        # atomic events: (branch, final outcome) with exact probabilities
        keys = []
        probs = []
        for key, inv, w, pa in branches:
            if inv:
                invalid.add(key)
            keys.append((key, inv, True))
            probs.append(w * pa)
            keys.append((key, inv, False))
            probs.append(w * (1.0 - pa))
        probs = np.asarray(probs, dtype=float).clip(min=0.0)
        probs /= probs.sum()
        drawn = run_rng(root, zi).multinomial(t_runs, probs)
        for (key, inv, acc), c in zip(keys, drawn):
            if c == 0:
                continue
            counts[(key, z)] = counts.get((key, z), 0) + int(c)
            if acc:
                accepts[(key, z)] = accepts.get((key, z), 0) + int(c)

    p_all: dict = {}
    for (key, z), c in counts.items():
        p_all[key] = p_all.get(key, 0.0) + c / (len(zs) * t_runs)
    survivors = {key: p for key, p in p_all.items() if p > gamma}
    lam: dict = {}
    undefined = []
    for key in survivors:
        if key in invalid:
            continue
        for z in zs:
            c = counts.get((key, z), 0)
            if c == 0:
                lam[(key, z)] = 0.0
                undefined.append((key, z))
            else:
                lam[(key, z)] = accepts.get((key, z), 0) / c
    return QueryStatistics(
        p_tilde=survivors,
        lam_tilde=lam,
        gamma=gamma,
        eps0=eps0,
        eps1=eps1,
        delta=delta,
        t_per_z=t_runs,
        q=v.q,
        proof_len=v.proof_len,
        omega_size=v.omega_size,
        invalid_tuples=tuple(sorted(k for k in survivors if k in invalid)),
        undefined_lam=tuple(undefined),
        constants={"c_p": c_p, "c_lam": c_lam, "dixie_c0": DIXIE_C0},
    )


# -- Hamiltonian assembly ------------------------------------------------------


@dataclass(frozen=True)
class LearnedHamiltonian:
    """Diagonal Hamiltonian on the proof bits with a certified norm-error bound."""

    ham: DiagonalHamiltonian
    bound: float
    m_tuples: int
    w_norm: float
    gamma: float
    eps0: float
    eps1: float


def lemma_schedule(eps: float, omega_size: int) -> tuple[float, float, float]:
    """Parameter choice making the certified bound come out <= eps."""
    if eps <= 0:
        raise ValidationError(f"eps must be positive, got {eps}")
    return eps / (4 * omega_size), eps / (4 * omega_size), eps / 4.0


def assemble_hamiltonian(stats: QueryStatistics, w_norm: float = 1.0) -> LearnedHamiltonian:
    """H~ = sum over tuples of P~(tuple) * sum_z (1 - lambda~(z)) |z><z|."""
    terms = []
    invalid = set(stats.invalid_tuples)
    for key in sorted(stats.p_tilde):
        weight = float(stats.p_tilde[key])
        if weight == 0.0:
            continue
        if key in invalid or len(key) < stats.q:
            # auto-rejected path: contributes its full mass at every proof
            terms.append(
                LocalTerm(support=(0,), weight=weight, matrix=np.eye(2, dtype=complex))
            )
            continue
        support = tuple(sorted(set(key)))
        pos = {qubit: i for i, qubit in enumerate(support)}
        dim = 2 ** len(support)
        diag = np.empty(dim)
        for assign in range(dim):
            bits = [(assign >> (len(support) - 1 - i)) & 1 for i in range(len(support))]
            z = tuple(bits[pos[idx]] for idx in key)
            diag[assign] = 1.0 - stats.lam_tilde.get((key, z), 0.0)
        terms.append(LocalTerm(support=support, weight=weight, matrix=np.diag(diag).astype(complex)))
    ham = DiagonalHamiltonian(stats.proof_len, terms)
    m = len(stats.p_tilde)
    bound = m * (stats.gamma + stats.eps0) + (w_norm + m * stats.eps0) * stats.eps1
    return LearnedHamiltonian(
        ham=ham,
        bound=float(bound),
        m_tuples=m,
        w_norm=float(w_norm),
        gamma=stats.gamma,
        eps0=stats.eps0,
        eps1=stats.eps1,
    )


def exact_hamiltonian(v: QcpcpVerifier) -> LearnedHamiltonian:
    """The verifier's true acceptance Hamiltonian: P[accept y] = 1 - <y|H|y>."""
    return assemble_hamiltonian(exact_statistics(v))


# -- adaptive-to-nonadaptive compilation --------------------------------------


@dataclass(frozen=True)
class NonadaptiveTranscript:
    decision: bool
    records: tuple[RunRecord, ...]
    fake_strings: tuple[tuple[int, ...], ...]
    consistent_run: int | None
    proof_bits_read: int
    t_runs: int
    c: float


def compile_nonadaptive(v: QcpcpVerifier, proof, C: float, seed) -> NonadaptiveTranscript:
    """Run with uniform injected strings, then filter against the real proof.

    The verifier is executed T = ceil(C * 2^q) times with uniformly random
    injected bits (the proof untouched); afterwards each transcript tuple
    is checked for consistency with the proof, which costs at most q bits
    per run. The first consistent run's outcome is the decision; no
    consistent run means reject.
    """
    if v.q > 4:
        raise ValidationError(f"compilation capped at q = 4, got {v.q}")
    if not C > 1.0:
        raise ValidationError(f"C must exceed 1, got {C}")
    bits = _proof_bits(proof, v.proof_len)
    t_runs = math.ceil(C * 2**v.q)
    root = int(seed)
    records = []
    fakes = []
    for i in range(t_runs):
        rng = run_rng(root, i)
        z = tuple(int(b) for b in rng.integers(0, 2, size=v.q))
        records.append(run_verifier(v, seed=rng, fake_bits=z))
        fakes.append(z)
    decision = False
    consistent_run = None
    bits_read = 0
    for i, (rec, z) in enumerate(zip(records, fakes)):
        if rec.invalid_index:
            continue
        bits_read += v.q
        if all(z[l] == bits[rec.indices[l]] for l in range(v.q)):
            consistent_run = i
            decision = rec.accept
            break
    return NonadaptiveTranscript(
        decision=decision,
        records=tuple(records),
        fake_strings=tuple(fakes),
        consistent_run=consistent_run,
        proof_bits_read=bits_read,
        t_runs=t_runs,
        c=float(C),
    )


def amplify_protocol(v, t: int):
    """t parallel copies with a majority vote; t = 1 returns v unchanged."""
    if int(t) != t or t < 1:
        raise ValidationError(f"repetition count must be a positive integer, got {t}")
    if t == 1:
        return v
    base = v.base if isinstance(v, RepeatedVerifier) else v
    reps = v.t * t if isinstance(v, RepeatedVerifier) else t
    return RepeatedVerifier(base, int(reps))


# -- collection-time bound -----------------------------------------------------


def _two_item_expectation(m: int) -> float:
    """Exact expected draws to collect m copies of each of 2 uniform items."""
    # E[a][b], a/b = copies held, walking backwards from (m, m)
    prev = np.zeros(m + 1)  # row a = m
    for b in range(m - 1, -1, -1):
        prev[b] = 2.0 + prev[b + 1]
    for a in range(m - 1, -1, -1):
        row = np.zeros(m + 1)
        row[m] = 2.0 + prev[m]
        for b in range(m - 1, -1, -1):
            row[b] = 1.0 + 0.5 * prev[b] + 0.5 * row[b + 1]
        prev = row
    return float(prev[0])


def dixie_cup_bound(gamma: float, m_repeats: int) -> float:
    """Expected draws to see every probability->gamma item m times.

    Upper bound ceil*ln(ceil) + (m-1)*ceil*lnln(ceil) + C0*ceil with
    C0 = 2; in the degenerate region ceil(1/gamma) <= e the lnln term is
    meaningless and the exact small-case expectation is returned.
    """
    if not (0.0 < gamma <= 1.0):
        raise ValidationError(f"gamma must be in (0, 1], got {gamma}")
    if int(m_repeats) != m_repeats or m_repeats < 1:
        raise ValidationError(f"m_repeats must be a positive integer, got {m_repeats}")
    ceil_g = math.ceil(1.0 / gamma)
    if ceil_g == 1:
        return float(m_repeats)
    if ceil_g == 2:
        return _two_item_expectation(int(m_repeats))
    return float(
        ceil_g * math.log(ceil_g)
        + (m_repeats - 1) * ceil_g * math.log(math.log(ceil_g))
        + DIXIE_C0 * ceil_g
    )
