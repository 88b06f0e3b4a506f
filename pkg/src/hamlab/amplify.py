"""Spectral-amplification decision: filtered norms of a guide against H.

Powers of H are expanded into Hermitian groups of term products that a
guiding state can evaluate one window at a time; the squared sign-filter
turns those moments into ||Q_alpha(H) u||, and a single threshold test
decides YES/NO. Also hosts the 2-SAT-to-diagonal reduction used to
manufacture hard instances.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import mpmath
import numpy as np

from . import dense
from .errors import BudgetExceeded, NumericalError, SizeError, ValidationError
from .hamiltonian import LocalHamiltonian, LocalTerm, expand_on_support
from .signpoly import ShiftedFilter, build_sign_poly
from .states.base import EvaluatableState

DEFAULT_BUDGET = 10_000_000
GROUP_DENSE_CAP = 12


# -- counting ------------------------------------------------------------


def per_power_count(m: int, l: int) -> int:
    """Number of Hermitian groups in the power-l expansion of an m-term H."""
    if m < 0 or l < 1:
        raise ValidationError(f"need m >= 0 and l >= 1, got m={m}, l={l}")
    if m == 0:
        return 0
    return m + (m**l - m) // 2


def cumulative_count(m: int, degree: int) -> int:
    """Total group count over powers 1..degree (closed form)."""
    if m < 0 or degree < 1:
        raise ValidationError(f"need m >= 0 and degree >= 1, got m={m}, degree={degree}")
    if m == 0:
        return 0
    if m == 1:
        return degree
    return m * (m**degree + degree * m - degree - 1) // (2 * (m - 1))


# -- expansion into Hermitian groups --------------------------------------


@dataclass(frozen=True)
class HermitianGroup:
    """One Hermitian summand of H^power.

    kind "power": a single word t,t,...,t (self-adjoint product).
    kind "pair": a word plus its reversal (the reversal is the adjoint).
    kind "palindromes": two distinct self-adjoint words, grouped so the
    per-power count matches the closed formula.
    """

    power: int
    kind: str
    words: tuple[tuple[int, ...], ...]
    support: tuple[int, ...]


@dataclass(frozen=True)
class ExpansionPlan:
    degree: int
    slices: tuple[tuple[HermitianGroup, ...], ...]
    total_count: int


def _word_support(h: LocalHamiltonian, words) -> tuple[int, ...]:
    qs: set[int] = set()
    for w in words:
        for i in w:
            qs.update(h.terms[i].support)
    return tuple(sorted(qs))


def expand_power(
    h: LocalHamiltonian, l: int, budget: int = DEFAULT_BUDGET
) -> tuple[HermitianGroup, ...]:
    """Partition the m^l words of H^l into Hermitian groups."""
    if l < 1:
        raise ValidationError(f"power must be >= 1, got {l}")
    m = h.m
    if m > 1 and m**l > budget:
        raise BudgetExceeded(
            f"m^l = {m}^{l} = {m**l} words exceeds budget {budget}"
        )
    groups: list[HermitianGroup] = []
    palindromes: list[tuple[int, ...]] = []
    for word in itertools.product(range(m), repeat=l):
        rev = word[::-1]
        if word == rev:
            if all(i == word[0] for i in word):
                groups.append(
                    HermitianGroup(l, "power", (word,), _word_support(h, (word,)))
                )
            else:
                palindromes.append(word)
        elif word < rev:
            groups.append(
                HermitianGroup(l, "pair", (word, rev), _word_support(h, (word,)))
            )
    if len(palindromes) % 2:
        raise NumericalError("odd palindrome count; expansion bookkeeping broken")
    for w1, w2 in zip(palindromes[::2], palindromes[1::2]):
        groups.append(
            HermitianGroup(l, "palindromes", (w1, w2), _word_support(h, (w1, w2)))
        )
    if m >= 1 and len(groups) != per_power_count(m, l):
        raise NumericalError("group count mismatch against closed formula")
    return tuple(groups)


def build_plan(
    h: LocalHamiltonian, degree: int, budget: int = DEFAULT_BUDGET
) -> ExpansionPlan:
    slices = tuple(expand_power(h, l, budget) for l in range(1, degree + 1))
    total = sum(len(s) for s in slices)
    return ExpansionPlan(degree=degree, slices=slices, total_count=total)


def group_matrix(
    h: LocalHamiltonian, group: HermitianGroup, cap: int = GROUP_DENSE_CAP
) -> tuple[list[int], np.ndarray]:
    """Exact dense matrix of the group on its union support (weights included)."""
    union = list(group.support)
    if len(union) > cap:
        raise SizeError(f"group support {len(union)} exceeds dense cap {cap}")
    dim = 2 ** len(union)

    def word_product(word):
        prod = np.eye(dim, dtype=complex)
        for i in word:
            t = h.terms[i]
            prod = prod @ expand_on_support(t.weight * t.matrix, list(t.support), union)
        return prod

    if group.kind == "pair":
        prod = word_product(group.words[0])
        return union, prod + prod.conj().T
    out = np.zeros((dim, dim), dtype=complex)
    for word in group.words:
        out += word_product(word)
    return union, out


def group_value(
    state: EvaluatableState, h: LocalHamiltonian, group: HermitianGroup
) -> tuple[float, int]:
    """Expectation of the group observable and the number of state calls."""

    def word_value(word) -> float:
        if len(word) == 1:
            return float(state.expectation(h.terms[word[0]]))
        ops = [h.terms[i] for i in word]
        return complex(state.expectation_bilinear(ops)).real

    if group.kind == "pair":
        # the reversal is the adjoint, so one evaluation covers the pair
        return 2.0 * word_value(group.words[0]), 1
    vals = [word_value(w) for w in group.words]
    return float(sum(vals)), len(vals)


def moment(
    state: EvaluatableState,
    h: LocalHamiltonian,
    l: int,
    budget: int = DEFAULT_BUDGET,
) -> float:
    """<u|H^l|u> as a deterministic pairwise-summed group reduction."""
    if l < 0:
        raise ValidationError(f"power must be >= 0, got {l}")
    if l == 0:
        return 1.0
    groups = expand_power(h, l, budget)
    if not groups:
        return 0.0
    vals = [np.float64(group_value(state, h, g)[0]) for g in groups]
    return float(dense.pairwise_sum(vals))


# -- filtered norm ---------------------------------------------------------

FLOAT_COEFF_TOL = 1e-8  # allowed radicand error from float64 moments


def _coeff_error_estimate(coeffs) -> float:
    """Radicand error if each float64 moment is off by ~(l+1)*1e-13."""
    est = 0.0
    for l, c in enumerate(coeffs):
        fc = abs(float(c))
        if not math.isfinite(fc):
            return math.inf
        est += fc * (l + 1) * 1e-13
    return est


def _expansion_radicand(
    state: EvaluatableState,
    h: LocalHamiltonian,
    filt: ShiftedFilter,
    budget: int,
) -> tuple[float, int]:
    coeffs = filt.square_monomials()
    evals = 0
    moments = [1.0]
    for l in range(1, len(coeffs)):
        groups = expand_power(h, l, budget)
        vals = []
        for g in groups:
            v, c = group_value(state, h, g)
            vals.append(np.float64(v))
            evals += c
        moments.append(float(dense.pairwise_sum(vals)) if vals else 0.0)
    with mpmath.workdps(max(60, 2 * filt.poly.degree)):
        rad = mpmath.fsum(c * mpmath.mpf(mv) for c, mv in zip(coeffs, moments))
    return float(rad), evals


def _clenshaw_norm(
    state: EvaluatableState, h: LocalHamiltonian, filt: ShiftedFilter
) -> tuple[float, int]:
    """||Q_alpha(H) u|| via operator Clenshaw on the dense statevector."""
    u = state.statevector()
    c = filt.poly.cheb
    alpha = filt.alpha
    matvecs = 0

    def y_apply(v: np.ndarray) -> np.ndarray:
        nonlocal matvecs
        matvecs += 1
        hv = dense.ham_matvec(h, v) if h.m else np.zeros_like(v)
        return 0.5 * (hv - alpha * v)

    b1 = np.zeros_like(u)
    b2 = np.zeros_like(u)
    for k in range(len(c) - 1, 0, -1):
        b1, b2 = c[k] * u + 2.0 * y_apply(b1) - b2, b1
    pu = c[0] * u + y_apply(b1) - b2
    q = 0.5 * (u - pu)
    return float(np.linalg.norm(q)), matvecs


def _filtered_norm_impl(
    state: EvaluatableState,
    h: LocalHamiltonian,
    filt: ShiftedFilter,
    strategy: str,
    budget: int,
) -> tuple[float, dict]:
    if strategy not in ("auto", "expansion", "clenshaw"):
        raise ValidationError(f"unknown strategy {strategy!r}")
    m = h.m
    deg2 = 2 * filt.poly.degree
    enumerable = m <= 1 or m**deg2 <= budget

    def budget_error() -> BudgetExceeded:
        need = cumulative_count(m, deg2) if m else 0
        return BudgetExceeded(
            "expansion needs m(m^D + D*m - D - 1)/(2(m-1)) = "
            f"{need} group evaluations at m={m}, D={deg2}; "
            f"m^D = {m**deg2} exceeds budget {budget}"
        )

    route = strategy
    if strategy == "auto":
        if m == 0:
            route = "expansion"
        elif enumerable and _coeff_error_estimate(filt.square_monomials()) <= FLOAT_COEFF_TOL:
            route = "expansion"
        else:
            route = "clenshaw"

    if route == "expansion":
        if not enumerable:
            raise budget_error()
        rad, evals = _expansion_radicand(state, h, filt, budget)
        if rad < -1e-9:
            raise NumericalError(f"radicand {rad} below clamp floor -1e-9")
        rad = max(rad, 0.0)
        return math.sqrt(rad), {
            "strategy": "expansion",
            "radicand": rad,
            "evaluations": evals,
        }

    try:
        val, matvecs = _clenshaw_norm(state, h, filt)
    except (SizeError, NotImplementedError) as exc:
        if not enumerable:
            raise budget_error() from exc
        raise NumericalError(
            "filter coefficients too large for float64 moments and the guide "
            "has no dense statevector path"
        ) from exc
    return val, {"strategy": "clenshaw", "radicand": val * val, "evaluations": matvecs}


def filtered_norm(
    state: EvaluatableState,
    h: LocalHamiltonian,
    filt: ShiftedFilter,
    strategy: str = "auto",
    budget: int = DEFAULT_BUDGET,
) -> float:
    """||Q_alpha(H) u|| = sqrt(sum_l c_l <u|H^l|u>) for Q^2 = sum_l c_l x^l."""
    return _filtered_norm_impl(state, h, filt, strategy, budget)[0]


# -- decision --------------------------------------------------------------


@dataclass(frozen=True)
class DecisionInstance:
    h: LocalHamiltonian
    a: float
    b: float
    zeta: float
    guide: EvaluatableState

    def __post_init__(self):
        if not (-1.0 <= self.a <= 1.0 and -1.0 <= self.b <= 1.0):
            raise ValidationError(f"thresholds a={self.a}, b={self.b} outside [-1,1]")
        if self.b - self.a <= 0.0:
            raise ValidationError(f"need b > a, got a={self.a}, b={self.b}")
        if not 0.0 < self.zeta <= 1.0:
            raise ValidationError(f"zeta must lie in (0,1], got {self.zeta}")
        if self.guide.n != self.h.n:
            raise ValidationError(
                f"guide has n={self.guide.n} but H has n={self.h.n}"
            )

    @property
    def delta(self) -> float:
        return self.b - self.a


_cached_sign_poly = functools.lru_cache(maxsize=64)(build_sign_poly)


def decide(
    inst: DecisionInstance, strategy: str = "auto", budget: int = DEFAULT_BUDGET
) -> tuple[str, dict]:
    """Threshold test on the filtered norm; YES iff it reaches (9/10)sqrt(zeta)."""
    inst.h.assert_norm_bound(allow_loose=True)
    alpha = 0.5 * (inst.a + inst.b)
    delta_p = 0.5 * inst.delta
    eps_p = 0.1 * math.sqrt(inst.zeta)
    poly = _cached_sign_poly(delta_p, eps_p)
    filt = ShiftedFilter(alpha, poly)
    fn, info = _filtered_norm_impl(inst.guide, inst.h, filt, strategy, budget)
    threshold = 0.9 * math.sqrt(inst.zeta)
    answer = "YES" if fn >= threshold else "NO"
    report = {
        "answer": answer,
        "filtered_norm": fn,
        "threshold": threshold,
        "separation": 0.4 * math.sqrt(inst.zeta),
        "alpha": alpha,
        "delta_prime": delta_p,
        "eps_prime": eps_p,
        "degree": poly.degree,
        "squared_degree": 2 * poly.degree,
        "observable_count": cumulative_count(inst.h.m, 2 * poly.degree),
        "strategy": info["strategy"],
        "evaluations": info["evaluations"],
        "a": inst.a,
        "b": inst.b,
        "zeta": inst.zeta,
    }
    return answer, report


def verify_close_guide(
    h: LocalHamiltonian, guide: EvaluatableState, a: float, f_inv: float
) -> str:
    """YES iff <u|H|u> <= a + f_inv (variational check for near-ground guides)."""
    if f_inv < 0:
        raise ValidationError(f"f_inv must be >= 0, got {f_inv}")
    energy = moment(guide, h, 1)
    return "YES" if energy <= a + f_inv else "NO"


# -- CSP reductions --------------------------------------------------------


def _normalize_clause(clause: Sequence[int], width: int) -> tuple[int, ...]:
    lits = tuple(int(x) for x in clause)
    if not lits or any(x == 0 for x in lits):
        raise ValidationError(f"clause {clause!r} must hold nonzero literals")
    seen = tuple(dict.fromkeys(lits))
    if len(seen) > width:
        raise ValidationError(f"clause {clause!r} wider than {width} literals")
    return seen


def csp_to_diagonal(
    clauses: Iterable[Sequence[int]],
    m_total: int | None = None,
    gamma: float | None = None,
):
    """Diagonal H with <x|H|x> = 1 - (satisfied fraction), plus thresholds.

    Clause list uses signed 1-based literals. m_total defaults to the clause
    count; a larger value pads the satisfied-fraction denominator.
    Returns (H, (a, b)) with a = 3/10, b = (4 - gamma)/10 when gamma is given,
    else (H, None).
    """
    clause_list = [_normalize_clause(c, 2) for c in clauses]
    if not clause_list:
        raise ValidationError("need at least one clause")
    mt = len(clause_list) if m_total is None else int(m_total)
    if mt < len(clause_list):
        raise ValidationError(
            f"m_total={mt} below clause count {len(clause_list)}; norm bound breaks"
        )
    n = max(abs(lit) for c in clause_list for lit in c)
    terms = []
    for c in clause_list:
        if len({abs(lit) for lit in c}) < len(c):
            continue  # x or not-x: never violated, no projector
        qs = sorted(abs(lit) - 1 for lit in c)
        bits = {abs(lit) - 1: (0 if lit > 0 else 1) for lit in c}
        idx = 0
        for q in qs:
            idx = 2 * idx + bits[q]
        mat = np.zeros((2 ** len(qs), 2 ** len(qs)), dtype=complex)
        mat[idx, idx] = 1.0
        terms.append(LocalTerm(support=tuple(qs), weight=1.0 / mt, matrix=mat))
    pad = 1.0 - len(clause_list) / mt
    if pad > 0:
        terms.append(LocalTerm(support=(0,), weight=pad, matrix=np.eye(2, dtype=complex)))
    h = LocalHamiltonian(n, terms)
    if gamma is None:
        return h, None
    if not 0.0 < gamma <= 1.0:
        raise ValidationError(f"gamma must lie in (0,1], got {gamma}")
    return h, (0.3, (4.0 - gamma) / 10.0)


DEFAULT_GAP_GADGET: tuple[tuple[int, ...], ...] = (
    (1,),
    (2,),
    (3,),
    (4,),
    (-1, -2),
    (-2, -3),
    (-1, -3),
    (1, -4),
    (2, -4),
    (3, -4),
)


def validate_gap_gadget(gadget: Sequence[Sequence[int]]) -> bool:
    """Exhaustively confirm the 7-vs-<=6 satisfied-count split.

    Gadget variables 1..3 stand for the three literal slots of a width-3
    clause; higher numbers are per-clause auxiliaries maximized over.
    """
    rows = [_normalize_clause(c, 2) for c in gadget]
    top = max(abs(lit) for c in rows for lit in c)
    n_aux = max(0, top - 3)
    for z in itertools.product((0, 1), repeat=3):
        best = 0
        for y in itertools.product((0, 1), repeat=n_aux):
            val = dict(enumerate(z, start=1)) | dict(enumerate(y, start=4))
            count = sum(
                1
                for c in rows
                if any(val[abs(lit)] == (1 if lit > 0 else 0) for lit in c)
            )
            best = max(best, count)
        if any(z):
            if best != 7:
                return False
        elif best > 6:
            return False
    return True


def expand_three_sat(
    clauses: Iterable[Sequence[int]],
    gadget: Sequence[Sequence[int]] = DEFAULT_GAP_GADGET,
) -> list[tuple[int, ...]]:
    """Replace each width-3 clause with its gadget image over fresh auxiliaries."""
    rows = [_normalize_clause(c, 3) for c in clauses]
    for c in rows:
        if len(c) != 3:
            raise ValidationError(f"clause {c!r} must hold exactly 3 literals")
    gadget_rows = [_normalize_clause(c, 2) for c in gadget]
    n = max(abs(lit) for c in rows for lit in c)
    n_aux = max(0, max(abs(g) for c in gadget_rows for g in c) - 3)
    out: list[tuple[int, ...]] = []
    for j, clause in enumerate(rows):
        for grow in gadget_rows:
            lits = []
            for g in grow:
                slot = abs(g)
                if slot <= 3:
                    base = clause[slot - 1]
                else:
                    base = n + j * n_aux + (slot - 3)
                lits.append(base if g > 0 else -base)
            out.append(tuple(lits))
    return out


def parse_dimacs(text: str) -> tuple[int, list[tuple[int, ...]]]:
    """Read a DIMACS CNF clause list; returns (variable count, clauses)."""
    declared = None
    clauses: list[tuple[int, ...]] = []
    pending: list[int] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c") or line.startswith("%"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValidationError(f"bad problem line {line!r}")
            try:
                declared = int(parts[2])
            except ValueError as exc:
                raise ValidationError(f"bad problem line {line!r}") from exc
            continue
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError as exc:
                raise ValidationError(f"bad literal {tok!r}") from exc
            if lit == 0:
                if pending:
                    clauses.append(tuple(pending))
                    pending = []
            else:
                pending.append(lit)
    if pending:
        clauses.append(tuple(pending))
    if not clauses:
        raise ValidationError("no clauses found")
    seen = max(abs(lit) for c in clauses for lit in c)
    if declared is not None and seen > declared:
        raise ValidationError(f"literal {seen} exceeds declared count {declared}")
    return declared if declared is not None else seen, clauses
