import numpy as np
import pytest

from hamlab import dense
from hamlab.errors import ParseError, SizeError, ValidationError
from hamlab.hamiltonian import (
    DiagonalHamiltonian,
    LocalHamiltonian,
    LocalTerm,
    ProjectorSumHamiltonian,
    embed_matrix,
    expand_on_support,
    frustration_free_check,
    ingest,
    is_projector_sum,
    is_stoquastic,
    pauli_term,
    qsat_form,
    to_json,
    to_text,
)
from util import rand_diag_ham, rand_local_ham

Z = np.diag([1.0, -1.0]).astype(complex)
P1 = np.diag([0.0, 1.0]).astype(complex)
P0 = np.diag([1.0, 0.0]).astype(complex)


class TestLocalTerm:
    def test_support_must_increase(self):
        with pytest.raises(ValidationError):
            LocalTerm(support=(2, 1), weight=1.0, matrix=np.eye(4, dtype=complex))
        with pytest.raises(ValidationError):
            LocalTerm(support=(1, 1), weight=1.0, matrix=np.eye(4, dtype=complex))

    def test_hermiticity_enforced(self):
        m = np.array([[0, 1], [0, 0]], dtype=complex)
        with pytest.raises(ValidationError):
            LocalTerm(support=(0,), weight=1.0, matrix=m)

    def test_norm_cap(self):
        with pytest.raises(ValidationError):
            LocalTerm(support=(0,), weight=1.0, matrix=2.0 * Z)

    def test_weight_sign(self):
        with pytest.raises(ValidationError):
            LocalTerm(support=(0,), weight=-0.5, matrix=Z)

    def test_matrix_frozen(self):
        t = LocalTerm(support=(0,), weight=1.0, matrix=Z)
        with pytest.raises(ValueError):
            t.matrix[0, 0] = 5.0

    def test_local_index_and_projector(self):
        t = LocalTerm(support=(0, 2), weight=1.0, matrix=np.diag([0, 0, 0, 1.0]).astype(complex))
        assert t.is_projector()
        assert t.is_diagonal()
        assert t.local_index([1, 0, 1]) == 3
        assert t.local_index([1, 1, 0]) == 2

    def test_embed_matches_embed_matrix(self):
        rng = np.random.default_rng(3)
        from util import rand_hermitian

        m = rand_hermitian(4, rng)
        t = LocalTerm(support=(1, 3), weight=0.7, matrix=m)
        want = 0.7 * embed_matrix(m, [1, 3], 4)
        assert np.allclose(t.embed(4), want, atol=1e-14)


def test_expand_on_support_reorders():
    rng = np.random.default_rng(5)
    from util import rand_hermitian

    m = rand_hermitian(4, rng)
    out = expand_on_support(m, [2, 0], [0, 1, 2])
    ref = embed_matrix(m, [2, 0], 3)
    assert np.allclose(out, ref, atol=1e-14)


def test_dense_is_linear():
    rng = np.random.default_rng(11)
    for _ in range(4):
        h1 = rand_local_ham(6, 4, 3, rng)
        h2 = rand_local_ham(6, 3, 2, rng)
        both = LocalHamiltonian(6, list(h1.terms) + list(h2.terms))
        assert np.max(np.abs(both.dense() - (h1.dense() + h2.dense()))) <= 1e-12


def test_eigenvalues_real_and_bounded():
    rng = np.random.default_rng(12)
    for _ in range(4):
        h = rand_local_ham(5, 4, 3, rng)
        vals = np.linalg.eigvals(h.dense())
        assert np.max(np.abs(vals.imag)) <= 1e-10
        bound = h.triangle_norm_bound()
        assert np.all(vals.real >= -bound - 1e-10)
        assert np.all(vals.real <= bound + 1e-10)


def test_norm_bound_paths():
    rng = np.random.default_rng(13)
    h = rand_local_ham(4, 3, 2, rng)
    assert h.operator_norm() <= h.triangle_norm_bound() + 1e-12
    h.assert_norm_bound()
    heavy = LocalHamiltonian(
        13, [LocalTerm(support=(q,), weight=1.0 / 13.0, matrix=Z) for q in range(13)]
    )
    # dense check infeasible at n=13; loose mode falls back to the triangle bound
    heavy.assert_norm_bound(allow_loose=True)
    with pytest.raises(SizeError):
        heavy.dense()


def test_diagonal_basis_energy_matches_dense():
    rng = np.random.default_rng(17)
    for _ in range(5):
        h = rand_diag_ham(6, 4, 3, rng)
        dh = DiagonalHamiltonian(6, list(h.terms))
        diag = np.real(np.diag(dh.dense()))
        for y in rng.integers(0, 2**6, size=8):
            assert abs(dh.basis_energy(int(y)) - diag[int(y)]) <= 1e-12
        bits = [1, 0, 1, 1, 0, 0]
        idx = int("101100", 2)
        assert abs(dh.basis_energy(bits) - diag[idx]) <= 1e-12


def test_diagonal_rejects_offdiagonal_terms():
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    with pytest.raises(ValidationError):
        DiagonalHamiltonian(2, [LocalTerm(support=(0,), weight=1.0, matrix=x)])


def test_projector_sum_checks():
    good = ProjectorSumHamiltonian(2, [LocalTerm(support=(0,), weight=1.0, matrix=P1)])
    assert is_projector_sum(good)
    h = LocalHamiltonian(1, [LocalTerm(support=(0,), weight=0.5, matrix=Z)])
    assert not is_projector_sum(h)


def test_frustration_free_check():
    # |1><1| on qubit 0 of two: |0>|anything| is annihilated
    h = ProjectorSumHamiltonian(2, [LocalTerm(support=(0,), weight=1.0, matrix=P1)])
    assert frustration_free_check(h)
    h2 = ProjectorSumHamiltonian(
        1,
        [
            LocalTerm(support=(0,), weight=1.0, matrix=P0),
            LocalTerm(support=(0,), weight=1.0, matrix=P1),
        ],
    )
    assert not frustration_free_check(h2)


def test_frustration_free_planted_null_vector():
    rng = np.random.default_rng(23)
    n = 5
    null = np.zeros(2**n, dtype=complex)
    null[0] = 1.0  # |00000> annihilated by projectors avoiding index 0
    terms = []
    for q in range(n):
        terms.append(LocalTerm(support=(q,), weight=1.0, matrix=P1))
    h = ProjectorSumHamiltonian(n, terms)
    assert frustration_free_check(h)
    assert abs(np.vdot(null, dense.ham_matvec(h, null))) <= 1e-15


def test_qsat_form_replicates_weights():
    h = LocalHamiltonian(
        2,
        [
            LocalTerm(support=(0,), weight=0.5, matrix=P1),
            LocalTerm(support=(1,), weight=1.0, matrix=P0),
        ],
    )
    proj, scale = qsat_form(h)
    assert scale == 2
    assert proj.m == 1 + 2
    assert np.max(np.abs(proj.dense() - scale * h.dense())) <= 1e-12


def test_qsat_form_rejects_irrational_weight():
    h = LocalHamiltonian(1, [LocalTerm(support=(0,), weight=0.3, matrix=P1)])
    with pytest.raises(ValidationError):
        qsat_form(h)


def test_stoquastic_flag():
    offneg = np.array([[0.0, -0.5], [-0.5, 0.0]], dtype=complex)
    h = LocalHamiltonian(1, [LocalTerm(support=(0,), weight=1.0, matrix=offneg)])
    assert is_stoquastic(h)
    offpos = np.array([[0.0, 0.5], [0.5, 0.0]], dtype=complex)
    h2 = LocalHamiltonian(1, [LocalTerm(support=(0,), weight=1.0, matrix=offpos)])
    assert not is_stoquastic(h2)


def test_pauli_term_helper():
    t = pauli_term("ZZ", (0, 2), weight=0.25)
    assert t.support == (0, 2)
    want = np.kron(Z, Z)
    assert np.allclose(t.matrix, want, atol=1e-15)


class TestSerialization:
    def test_text_roundtrip_dense_equal(self):
        rng = np.random.default_rng(29)
        h = rand_local_ham(5, 4, 3, rng)
        back = ingest(to_text(h))
        assert back.n == h.n and back.m == h.m
        assert np.max(np.abs(back.dense() - h.dense())) <= 1e-15

    def test_kind_preserved(self):
        rng = np.random.default_rng(31)
        h = rand_diag_ham(4, 3, 2, rng)
        dh = DiagonalHamiltonian(4, list(h.terms))
        back = ingest(to_text(dh))
        assert isinstance(back, DiagonalHamiltonian)
        assert to_json(back)["kind"] == "diagonal"

    def test_garbage_rejected(self):
        with pytest.raises(ParseError):
            ingest("not a hamiltonian")
        with pytest.raises(ParseError):
            ingest('{"n": 2}')


def test_term_order_is_canonical():
    rng = np.random.default_rng(37)
    h = rand_local_ham(4, 5, 2, rng)
    perm = list(h.terms)[::-1]
    h2 = LocalHamiltonian(4, perm)
    assert h2.terms == h.terms
