"""History-state reductions: acceptance operators, clock assembly, block pairs."""

import numpy as np
import pytest

from hamlab import dense
from hamlab.circuits import Gate
from hamlab.clock import (
    VerifierCircuit,
    accept_probability,
    apply_cnot_trick,
    build_block_instance,
    build_clock,
    history_state,
    mw_operator,
    verifier_from_json,
    verifier_to_json,
    verify_fidelity_chain,
)
from hamlab.errors import PenaltyTooLarge, SizeError, ValidationError


def cnot_verifier():
    # accepts iff the witness bit is 1
    return VerifierCircuit(1, 1, 0, (Gate("cnot", (1, 0)),))


def test_accept_probability_deterministic():
    vc = VerifierCircuit(1, 0, 0, (Gate("x", (0,)),))
    assert accept_probability(vc, [0], []) == pytest.approx(1.0, abs=1e-12)
    vc_h = VerifierCircuit(1, 0, 0, (Gate("h", (0,)),))
    assert accept_probability(vc_h, [0], []) == pytest.approx(0.5, abs=1e-12)


def test_accept_probability_witness_controlled():
    vc = cnot_verifier()
    assert accept_probability(vc, [0], [1]) == 1.0
    assert accept_probability(vc, [0], [0]) == 0.0
    plus = np.array([1.0, 1.0]) / np.sqrt(2.0)
    assert accept_probability(vc, [0], plus) == pytest.approx(0.5, abs=1e-12)


def test_mw_operator_diagonal_is_accept_prob():
    vc = VerifierCircuit(1, 1, 1, (Gate("h", (1,)), Gate("cnot", (1, 0))))
    q = mw_operator(vc, [0])
    for w in (0, 1):
        assert abs(q[w, w] - accept_probability(vc, [0], [w])) < 1e-12
    assert abs(q[0, 1]) > 0.4
    assert np.max(np.abs(q - q.conj().T)) < 1e-12


def test_cnot_trick_kills_offdiagonals():
    vc = VerifierCircuit(1, 1, 1, (Gate("h", (1,)), Gate("cnot", (1, 0))))
    q = mw_operator(vc, [0])
    qd = mw_operator(apply_cnot_trick(vc), [0])
    assert abs(qd[0, 1]) + abs(qd[1, 0]) <= 1e-12
    assert np.allclose(np.diag(qd), np.diag(q), atol=1e-12)


def test_cnot_trick_preserves_accept_probs():
    vc = cnot_verifier()
    vt = apply_cnot_trick(vc)
    for w in (0, 1):
        assert abs(
            accept_probability(vt, [0], [w]) - accept_probability(vc, [0], [w])
        ) < 1e-12


def test_history_energy_accepting_circuit_is_zero():
    vc = VerifierCircuit(1, 0, 0, (Gate("x", (0,)), Gate("i", (0,))))
    ck = build_clock(vc, 1e-3)
    eta = history_state(ck, [])
    e = np.vdot(eta, dense.ham_matvec(ck.h_fk, eta)).real
    assert abs(e) < 1e-12


def test_history_energy_law():
    # <eta|H_FK|eta> = eps*(1-p)/(T+1); here p = 0.5, T = 2
    vc = VerifierCircuit(1, 0, 0, (Gate("h", (0,)), Gate("i", (0,))))
    ck = build_clock(vc, 1e-3)
    eta = history_state(ck, [])
    e = np.vdot(eta, dense.ham_matvec(ck.h_fk, eta)).real
    assert abs(e - 1e-3 * 0.5 / 3.0) < 1e-12


def test_certificate_residuals_zero():
    vc = VerifierCircuit(1, 0, 0, (Gate("h", (0,)), Gate("i", (0,))))
    ck = build_clock(vc, 1e-3)
    for key, val in ck.certificate.items():
        if key.endswith("residual"):
            assert abs(val) < 1e-12, key


def test_ground_state_close_to_history():
    vc = VerifierCircuit(1, 0, 0, (Gate("h", (0,)), Gate("i", (0,))))
    ck = build_clock(vc, 1e-3)
    eta = history_state(ck, [])
    dec = dense.diagonalize(ck.h_fk)
    f = abs(np.vdot(eta, dec.eigenvectors[:, 0])) ** 2
    assert f > 0.999


def test_history_overlap_with_initial_slice():
    vc = VerifierCircuit(1, 0, 0, (Gate("h", (0,)), Gate("i", (0,))))
    ck = build_clock(vc, 1e-3)
    eta = history_state(ck, [])
    u0 = np.zeros_like(eta)
    u0[0] = 1.0  # data |0>, clock |00>
    assert abs(abs(np.vdot(u0, eta)) ** 2 - 1.0 / 3.0) < 1e-12


def test_penalty_guard():
    vc = VerifierCircuit(1, 0, 0, (Gate("h", (0,)), Gate("i", (0,))))
    with pytest.raises(PenaltyTooLarge):
        build_clock(vc, 0.2)


def test_size_guard():
    vc = VerifierCircuit(8, 0, 0, tuple(Gate("i", (0,)) for _ in range(7)))
    with pytest.raises(SizeError):
        build_clock(vc, 1e-4)


def test_eps_validation():
    vc = VerifierCircuit(1, 0, 0, (Gate("x", (0,)),))
    with pytest.raises(ValidationError):
        build_clock(vc, 0.0)


def test_single_gate_clock():
    vc = VerifierCircuit(1, 0, 0, (Gate("x", (0,)),))
    ck = build_clock(vc, 0.05)
    eta = history_state(ck, [])
    assert abs(np.vdot(eta, dense.ham_matvec(ck.h_fk, eta)).real) < 1e-12
    assert ck.n == 2  # one data qubit + one clock qubit


def test_input_penalty_selects_x():
    # wrong input bit is penalized at t=0
    vc = VerifierCircuit(1, 0, 0, (Gate("i", (0,)),))
    ck = build_clock(vc, 1e-3, input_x=[1])
    # state |x=0, t=0>: data |0>, clock |0> -> index 0
    bad = np.zeros(4, dtype=complex)
    bad[0] = 1.0
    e = np.vdot(bad, dense.ham_matvec(ck.h_in, bad)).real
    assert e == pytest.approx(1.0)


def test_block_overlap_formula():
    # guide overlap with the history state is N/(N + T~ + 1) under idling
    ck = build_clock(cnot_verifier(), 1e-3)
    blk = build_block_instance(ck, idle_N=4, witness=[1], eps=1e-5)
    eta = history_state(blk.clock, blk.witness)
    u_full = blk.u_yes.statevector().reshape(-1, 2)[:, 0]
    ov = abs(np.vdot(u_full, eta)) ** 2
    assert abs(ov - 4.0 / 6.0) < 1e-12
    assert blk.t_tilde == 1
    assert blk.idle_n == 4


def test_fidelity_chain_report():
    ck = build_clock(cnot_verifier(), 1e-3)
    blk = build_block_instance(ck, idle_N=4, witness=[1], eps=1e-5)
    rep = verify_fidelity_chain(blk)
    assert rep["triangle_pass"]
    assert abs(rep["no_lambda0"] - blk.b_offset) < 1e-15
    assert rep["overlap_guide_ground"] > 0.6
    assert rep["overlap_guide_history"] <= rep["triangle_rhs"] + 1.0
    assert rep["idle_n"] == 4
    assert rep["t_tilde"] == 1


def test_block_spectrum_is_union():
    ck = build_clock(cnot_verifier(), 1e-3)
    blk = build_block_instance(ck, idle_N=2, witness=[1], eps=1e-5)
    hy = dense.diagonalize(blk.h_yes).eigenvalues
    hn = np.sort(np.real(np.diag(blk.h_no.dense())))
    hall = dense.diagonalize(blk.h).eigenvalues
    union = np.sort(np.concatenate([hy, hn]))
    assert np.max(np.abs(hall - union)) < 1e-10


def test_no_branch_gapped_at_offset():
    ck = build_clock(cnot_verifier(), 1e-3)
    blk = build_block_instance(ck, idle_N=2, witness=[1], eps=1e-5)
    hn = np.sort(np.real(np.diag(blk.h_no.dense())))
    assert abs(hn[0] - blk.b_offset) < 1e-15
    assert hn[1] - hn[0] > 0.999


def test_default_b_offset():
    ck = build_clock(cnot_verifier(), 1e-3)
    blk = build_block_instance(ck, idle_N=3, witness=[1], eps=1e-5)
    assert blk.b_offset == pytest.approx(0.1 / blk.t_tilde**7)


def test_block_idle_validation():
    ck = build_clock(cnot_verifier(), 1e-3)
    with pytest.raises(ValidationError):
        build_block_instance(ck, idle_N=-1, witness=[1], eps=1e-5)


def test_verifier_json_roundtrip():
    vc = cnot_verifier()
    assert verifier_from_json(verifier_to_json(vc)) == vc
    vc2 = VerifierCircuit(1, 1, 1, (Gate("h", (2,)), Gate("toffoli", (1, 2, 0))))
    assert verifier_from_json(verifier_to_json(vc2)) == vc2


def test_verifier_circuit_validation():
    with pytest.raises(ValidationError):
        VerifierCircuit(0, 0, 0, (Gate("x", (0,)),))
    with pytest.raises(ValidationError):
        VerifierCircuit(1, 0, 0, (Gate("x", (3,)),))
    # rotations sit outside the restricted gate set of the reduction
    with pytest.raises(ValidationError):
        VerifierCircuit(1, 0, 0, (Gate("ry", (0,), (0.37,)),))
    # an empty gate list is structurally legal; clock assembly rejects it
    empty = VerifierCircuit(1, 0, 0, ())
    with pytest.raises(ValidationError):
        build_clock(empty, 1e-3)
