"""Power expansion, moments, filtered norms, the decision routine, CSP maps."""

import itertools
import math

import numpy as np
import pytest

from hamlab import dense
from hamlab.amplify import (
    DEFAULT_GAP_GADGET,
    DecisionInstance,
    build_plan,
    csp_to_diagonal,
    cumulative_count,
    decide,
    expand_power,
    expand_three_sat,
    filtered_norm,
    group_matrix,
    moment,
    parse_dimacs,
    per_power_count,
    validate_gap_gadget,
    verify_close_guide,
)
from hamlab.errors import BudgetExceeded, ValidationError
from hamlab.hamiltonian import LocalHamiltonian, LocalTerm, pauli_term
from hamlab.signpoly import ShiftedFilter, SignPolynomial, build_sign_poly
from hamlab.states import SubsetState
from hamlab.states.mps import random_mps

from util import rand_local_ham


# -- counts ------------------------------------------------------------------


def test_per_power_count_matches_enumeration():
    for m in range(2, 6):
        for l in range(1, 5):
            words = list(itertools.product(range(m), repeat=l))
            groups = 0
            palin = 0
            for w in words:
                r = w[::-1]
                if w == r:
                    if all(i == w[0] for i in w):
                        groups += 1
                    else:
                        palin += 1
                elif w < r:
                    groups += 1
            groups += palin // 2
            assert per_power_count(m, l) == groups, (m, l)


def test_cumulative_count_closed_form():
    for m in range(2, 6):
        for d in range(1, 6):
            want = m * (m**d + d * m - d - 1) // (2 * (m - 1))
            assert cumulative_count(m, d) == want


def test_cumulative_count_degenerate_cases():
    assert cumulative_count(0, 4) == 0
    for d in range(1, 6):
        assert cumulative_count(1, d) == d


def test_build_plan_total_matches_formula():
    rng = np.random.default_rng(127)
    h = rand_local_ham(4, 3, 2, rng)
    plan = build_plan(h, 4)
    assert plan.total_count == cumulative_count(3, 4)
    assert len(plan.slices) == 4


def test_m2_l3_group_count():
    rng = np.random.default_rng(131)
    h = rand_local_ham(3, 2, 2, rng)
    assert len(expand_power(h, 3)) == 5
    assert cumulative_count(2, 3) == 10


def test_single_term_one_group_per_power():
    rng = np.random.default_rng(137)
    h = rand_local_ham(3, 1, 2, rng)
    for l in range(1, 5):
        assert len(expand_power(h, l)) == 1


# -- expansion correctness -----------------------------------------------------


def test_groups_sum_to_dense_power():
    rng = np.random.default_rng(139)
    h = rand_local_ham(6, 4, 2, rng)
    hd = h.dense()
    target = hd @ hd
    total = np.zeros_like(target)
    for g in expand_power(h, 2):
        support, mat = group_matrix(h, g)
        from hamlab.hamiltonian import embed_matrix

        total += embed_matrix(mat, support, 6)
    assert np.max(np.abs(total - target)) < 1e-10


def test_group_matrices_hermitian():
    rng = np.random.default_rng(149)
    h = rand_local_ham(4, 3, 2, rng)
    for l in (2, 3):
        for g in expand_power(h, l):
            _, mat = group_matrix(h, g)
            assert np.max(np.abs(mat - mat.conj().T)) < 1e-12


def test_expansion_budget_guard():
    rng = np.random.default_rng(151)
    h = rand_local_ham(4, 3, 2, rng)
    with pytest.raises(BudgetExceeded):
        expand_power(h, 5, budget=200)


# -- moments -------------------------------------------------------------------


def test_moment_half_z_cubed():
    h = LocalHamiltonian(1, [pauli_term("z", (0,), weight=0.5)])
    u = SubsetState(1, (0,))
    assert moment(u, h, 3) == pytest.approx(0.125, abs=1e-12)


def test_moment_l0_is_one():
    rng = np.random.default_rng(157)
    h = rand_local_ham(3, 2, 2, rng)
    u = SubsetState(3, (1, 4))
    assert moment(u, h, 0) == 1.0


def test_moment_matches_dense():
    rng = np.random.default_rng(163)
    n = 8
    h = rand_local_ham(n, 5, 2, rng)
    u = random_mps(n, 3, rng)
    psi = u.statevector()
    hd = h.dense()
    cur = psi.copy()
    for l in range(1, 5):
        cur = hd @ cur
        want = np.vdot(psi, cur).real
        assert abs(moment(u, h, l) - want) < 1e-9, f"l={l}"


def test_moment_rejects_negative_power():
    rng = np.random.default_rng(167)
    h = rand_local_ham(2, 2, 1, rng)
    with pytest.raises(ValidationError):
        moment(SubsetState(2, (0,)), h, -1)


# -- filtered norm --------------------------------------------------------------


def hand_poly():
    # P(x) = T_3(x/2): odd, |P| <= 1 on [-2,2]; monomials [0, -1.5, 0, 0.5]
    return SignPolynomial(
        delta_p=0.5,
        eps_p=0.1,
        degree=3,
        cheb=np.array([0.0, 0.0, 0.0, 1.0]),
        kappa=1.0,
        c_constant=1.0,
        certificate={},
    )


def test_routes_agree_with_dense():
    rng = np.random.default_rng(173)
    n = 4
    h = rand_local_ham(n, 3, 2, rng)
    u = random_mps(n, 2, rng)
    poly = hand_poly()
    alpha = 0.15
    filt = ShiftedFilter(alpha, poly)

    psi = u.statevector()
    hd = h.dense()
    dec = dense.diagonalize(hd - alpha * np.eye(2**n))
    p_mat = dense.poly_of_matrix(dec, [0.0, -1.5, 0.0, 0.5])
    q_mat = 0.5 * (np.eye(2**n) - p_mat)
    want = float(np.linalg.norm(q_mat @ psi))

    via_exp = filtered_norm(u, h, filt, strategy="expansion")
    via_cl = filtered_norm(u, h, filt, strategy="clenshaw")
    assert abs(via_exp - want) < 1e-8
    assert abs(via_cl - want) < 1e-8
    assert abs(via_exp - via_cl) < 1e-8


def test_filtered_norm_empty_hamiltonian():
    poly = build_sign_poly(0.2, 0.1)
    filt = ShiftedFilter(0.5, poly)
    h = LocalHamiltonian(2, [])
    u = SubsetState(2, (0, 3))
    fn = filtered_norm(u, h, filt)
    assert 0.95 <= fn <= 1.0


def test_filtered_norm_high_eigenstate_is_small():
    # diagonal H with a basis-state eigenvector above alpha + delta'
    rng = np.random.default_rng(179)
    n = 4
    diag = rng.uniform(-1, 1, size=2**n)
    j_hi = int(np.argmax(diag))
    diag[j_hi] = 0.9
    terms = []
    for q in range(n):
        terms.append(pauli_term("z", (q,), weight=0.0))
    # build an explicitly diagonal local decomposition: one projector per string is
    # too many terms; use a single n-local diagonal matrix instead
    mat = np.diag(diag).astype(complex)
    h = LocalHamiltonian(n, [LocalTerm(support=tuple(range(n)), weight=1.0, matrix=mat)])
    poly = build_sign_poly(0.2, 0.1)
    alpha = 0.4
    filt = ShiftedFilter(alpha, poly)
    u = SubsetState(n, (j_hi,))
    fn = filtered_norm(u, h, filt, strategy="clenshaw")
    assert fn <= 0.05 + 1e-6


def test_filtered_norm_matches_dense_poly():
    rng = np.random.default_rng(181)
    n = 5
    h = rand_local_ham(n, 4, 2, rng)
    u = random_mps(n, 3, rng)
    poly = build_sign_poly(0.5, 0.1)
    alpha = -0.2
    filt = ShiftedFilter(alpha, poly)

    psi = u.statevector()
    hd = h.dense()
    coeffs = [float(c) for c in poly.monomial_coefficients()]
    dec = dense.diagonalize(hd - alpha * np.eye(2**n))
    p_mat = dense.poly_of_matrix(dec, coeffs)
    q_mat = 0.5 * (np.eye(2**n) - p_mat)
    want = float(np.linalg.norm(q_mat @ psi))
    got = filtered_norm(u, h, filt)
    assert abs(got - want) < 1e-8


# -- decide ----------------------------------------------------------------------


def test_decide_planted_yes():
    # spectrum {0, 0.5}: 0.25*(I - Z) on one qubit; ground state |0> at energy 0
    mat = 0.5 * (np.eye(2) - np.diag([1.0, -1.0])).astype(complex)
    h = LocalHamiltonian(1, [LocalTerm(support=(0,), weight=0.5, matrix=mat)])
    inst = DecisionInstance(h=h, a=0.1, b=0.4, zeta=1.0, guide=SubsetState(1, (0,)))
    answer, report = decide(inst)
    assert answer == "YES"
    assert report["filtered_norm"] >= report["threshold"]


def test_decide_uniform_spectrum_no():
    h = LocalHamiltonian(
        1, [LocalTerm(support=(0,), weight=0.5, matrix=np.eye(2, dtype=complex))]
    )
    for guide in (SubsetState(1, (0,)), SubsetState(1, (0, 1))):
        inst = DecisionInstance(h=h, a=0.1, b=0.4, zeta=1.0, guide=guide)
        answer, report = decide(inst)
        assert answer == "NO"
        assert report["filtered_norm"] <= 0.5 * math.sqrt(1.0) + 1e-6


def test_decide_term_permutation_invariant():
    rng = np.random.default_rng(191)
    n = 3
    h1 = rand_local_ham(n, 3, 2, rng)
    # same multiset of terms, scrambled input order; canonical sort restores it
    h2 = LocalHamiltonian(n, list(reversed(h1.terms)))
    guide = SubsetState(n, (0, 5))
    r1 = decide(DecisionInstance(h=h1, a=-0.2, b=0.2, zeta=0.5, guide=guide))[1]
    r2 = decide(DecisionInstance(h=h2, a=-0.2, b=0.2, zeta=0.5, guide=guide))[1]
    assert r1["answer"] == r2["answer"]
    assert r1["filtered_norm"] == r2["filtered_norm"]


def test_decide_report_fields():
    mat = np.eye(2, dtype=complex)
    h = LocalHamiltonian(1, [LocalTerm(support=(0,), weight=0.5, matrix=mat)])
    inst = DecisionInstance(h=h, a=0.0, b=0.5, zeta=0.25, guide=SubsetState(1, (1,)))
    _, report = decide(inst)
    assert report["alpha"] == 0.25
    assert report["delta_prime"] == 0.25
    assert report["eps_prime"] == pytest.approx(0.05)
    assert report["threshold"] == pytest.approx(0.45)
    assert report["separation"] == pytest.approx(0.2)
    assert report["squared_degree"] == 2 * report["degree"]
    assert report["observable_count"] == cumulative_count(1, report["squared_degree"])


def test_decision_instance_validation():
    rng = np.random.default_rng(193)
    h = rand_local_ham(2, 2, 1, rng)
    u = SubsetState(2, (0,))
    with pytest.raises(ValidationError):
        DecisionInstance(h=h, a=0.4, b=0.1, zeta=1.0, guide=u)
    with pytest.raises(ValidationError):
        DecisionInstance(h=h, a=-2.0, b=0.1, zeta=1.0, guide=u)
    with pytest.raises(ValidationError):
        DecisionInstance(h=h, a=0.0, b=0.1, zeta=0.0, guide=u)
    with pytest.raises(ValidationError):
        DecisionInstance(h=h, a=0.0, b=0.1, zeta=1.0, guide=SubsetState(3, (0,)))


# -- close-guide verifier -----------------------------------------------------------


def test_verify_close_guide_exact_ground():
    mat = np.diag([0.2, 0.7]).astype(complex)
    h = LocalHamiltonian(1, [LocalTerm(support=(0,), weight=1.0, matrix=mat)])
    assert verify_close_guide(h, SubsetState(1, (0,)), a=0.2, f_inv=0.05) == "YES"


def test_verify_close_guide_no_instance():
    h = LocalHamiltonian(
        1, [LocalTerm(support=(0,), weight=0.5, matrix=np.eye(2, dtype=complex))]
    )
    # every state has energy exactly 0.5 > a + f_inv
    for u in (SubsetState(1, (0,)), SubsetState(1, (0, 1))):
        assert verify_close_guide(h, u, a=0.1, f_inv=0.2) == "NO"


def test_verify_close_guide_controlled_overlap():
    # |u|^2 overlap exactly 1 - f_inv with the ground space, lambda_0 = a
    f_inv = 0.25
    mat = np.diag([0.0, 1.0]).astype(complex)
    h = LocalHamiltonian(1, [LocalTerm(support=(0,), weight=1.0, matrix=mat)])
    # uniform over both strings: overlap 1/2 with ground; energy = 1/2 <= 0 + f_inv fails;
    # use f_inv = 0.5 boundary instead
    u = SubsetState(1, (0, 1))
    assert verify_close_guide(h, u, a=0.0, f_inv=0.5) == "YES"
    assert verify_close_guide(h, u, a=0.0, f_inv=0.25) == "NO"


def test_verify_close_guide_rejects_negative_tolerance():
    rng = np.random.default_rng(197)
    h = rand_local_ham(2, 2, 1, rng)
    with pytest.raises(ValidationError):
        verify_close_guide(h, SubsetState(2, (0,)), a=0.0, f_inv=-0.1)


# -- CSP reduction -------------------------------------------------------------------


def diag_energies(h):
    return np.real(np.diag(h.dense()))


def test_single_clause_truth_table():
    h, thresholds = csp_to_diagonal([(1, 2)])
    assert thresholds is None
    e = diag_energies(h)
    # H = I - H' with H' the satisfied-fraction: x=11 satisfies, x=00 violates
    assert e[3] == 0.0
    assert e[0] == 1.0
    assert e[1] == 0.0 and e[2] == 0.0


def test_satisfiable_formula_reaches_zero():
    clauses = [(1, 2), (-1, 3), (2, -3)]
    h, _ = csp_to_diagonal(clauses)
    e = diag_energies(h)
    assert np.min(e) == 0.0


def test_brute_force_matches_max_sat():
    rng = np.random.default_rng(199)
    for _ in range(5):
        n = int(rng.integers(3, 9))
        m = int(rng.integers(3, 12))
        clauses = []
        for _ in range(m):
            v1, v2 = rng.choice(n, size=2, replace=False) + 1
            s1, s2 = rng.choice([-1, 1], size=2)
            clauses.append((int(s1 * v1), int(s2 * v2)))
        h, _ = csp_to_diagonal(clauses)
        e = diag_energies(h)
        best = 0
        for x in range(2**h.n):
            bits = [(x >> (h.n - 1 - q)) & 1 for q in range(h.n)]
            sat = 0
            for c in clauses:
                if any(bits[abs(l) - 1] == (1 if l > 0 else 0) for l in c):
                    sat += 1
            best = max(best, sat)
        assert abs(np.min(e) - (1.0 - best / m)) < 1e-12


def test_m_total_padding():
    h, _ = csp_to_diagonal([(1, 2)], m_total=4)
    e = diag_energies(h)
    # satisfied: 3/4 padding identity remains; violated: 1/4 + 3/4
    assert e[3] == pytest.approx(0.75)
    assert e[0] == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        csp_to_diagonal([(1, 2), (1, -2)], m_total=1)


def test_tautological_clause_skipped():
    h, _ = csp_to_diagonal([(1, -1), (1, 2)])
    # the tautology contributes no projector; denominator still counts it
    e = diag_energies(h)
    assert e[3] == pytest.approx(0.0)
    assert e[0] == pytest.approx(0.5)


def test_gamma_thresholds():
    _, th = csp_to_diagonal([(1, 2)], gamma=0.6)
    assert th == (0.3, pytest.approx(0.34))
    with pytest.raises(ValidationError):
        csp_to_diagonal([(1, 2)], gamma=1.5)


def test_clause_validation():
    with pytest.raises(ValidationError):
        csp_to_diagonal([(0, 1)])
    with pytest.raises(ValidationError):
        csp_to_diagonal([(1, 2, 3)])
    with pytest.raises(ValidationError):
        csp_to_diagonal([])


# -- gap gadget -------------------------------------------------------------------


def test_default_gadget_validates():
    assert validate_gap_gadget(DEFAULT_GAP_GADGET) is True


def test_broken_gadget_rejected():
    assert validate_gap_gadget(DEFAULT_GAP_GADGET[:-1]) is False


def test_expand_three_sat_counts():
    clauses = [(1, 2, 3), (-1, 2, -4)]
    out = expand_three_sat(clauses)
    assert len(out) == 20
    assert all(len(c) <= 2 for c in out)
    with pytest.raises(ValidationError):
        expand_three_sat([(1, 2)])


# -- DIMACS -------------------------------------------------------------------------


def test_parse_dimacs_roundtrip():
    text = """c comment line
p cnf 3 2
1 -2 0
2 3 0
"""
    n, clauses = parse_dimacs(text)
    assert n == 3
    assert clauses == [(1, -2), (2, 3)]


def test_parse_dimacs_errors():
    with pytest.raises(ValidationError):
        parse_dimacs("p cnf x 2\n1 0\n")
    with pytest.raises(ValidationError):
        parse_dimacs("1 junk 0\n")
    with pytest.raises(ValidationError):
        parse_dimacs("c nothing here\n")
    with pytest.raises(ValidationError):
        parse_dimacs("p cnf 1 1\n1 -2 0\n")
