"""Circuit parsing, generator matrices, gate products, and the CNOT identity."""

import math

import numpy as np
import pytest
from scipy.linalg import expm

from impcompile import circuit as circ_mod
from impcompile.circuit import (
    Circuit,
    CircuitFormatError,
    Instruction,
    OperatorId,
    circuit_unitary,
    cnot_identity_check,
    operator_matrix,
    parse_circuit,
    rx,
    rxx,
    theta_mod_4pi,
)
from impcompile.fock import build_basis

import oracles


def test_parse_basic():
    parsed = parse_circuit("n_modes 4\nhop 1 3.14159")
    assert parsed.n_modes == 4
    assert parsed.instructions == (Instruction(OperatorId.hop(1), 3.14159),)


def test_parse_preserves_order():
    parsed = parse_circuit("n_modes 4\nimp 0.5\nhop 2 1.0")
    assert [str(inst.op) for inst in parsed.instructions] == ["imp", "hop_2"]


def test_parse_comments_and_whitespace():
    text = "# header\n\n n_modes   5  # trailing\nhop 3 -0.25\n"
    parsed = parse_circuit(text)
    assert parsed.n_modes == 5
    assert parsed.instructions[0].theta == -0.25


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("n_modes 2\nimp 0.5", "n_modes must be >= 3"),
        ("n_modes 4\nhop 3 1.0", "hop site 3"),
        ("n_modes 4\nhop 1", "expected: hop"),
        ("hop 1 0.5", "n_modes must come before"),
        ("n_modes 4\nfoo 1", "unknown directive"),
        ("n_modes 4\nhop 1 abc", "bad number"),
        ("n_modes 4", "no instructions"),
        ("", "missing n_modes"),
    ],
)
def test_parse_errors(text, fragment):
    with pytest.raises(CircuitFormatError) as err:
        parse_circuit(text)
    assert fragment in str(err.value)


def test_parse_error_reports_line_number():
    with pytest.raises(CircuitFormatError) as err:
        parse_circuit("n_modes 4\nhop 1 0.5\nhop 9 0.5")
    assert err.value.line_no == 3


def test_instruction_rejects_non_finite():
    with pytest.raises(ValueError):
        Instruction(OperatorId.hop(1), float("nan"))


def test_theta_mod_4pi():
    assert theta_mod_4pi(4 * math.pi + 0.5) == pytest.approx(0.5)
    assert theta_mod_4pi(-0.5) == pytest.approx(4 * math.pi - 0.5)


def test_operator_matrix_hop_single_particle():
    basis = build_basis(2, 1)
    mat = operator_matrix(OperatorId.hop(1), basis).to_dense()
    assert np.array_equal(mat, np.array([[0, 1], [1, 0]], dtype=complex))


def test_operator_matrix_impurity_bare_hop_when_empty():
    # with mode N-1 empty the density factor is +1, so elements match the hop
    basis = build_basis(3, 1)
    imp = operator_matrix(OperatorId.impurity(), basis).to_dense()
    from impcompile.fock import hopping_term

    hop = hopping_term(basis, 0, 2, 1.0).to_dense()
    assert np.array_equal(imp, hop)  # one particle never occupies the middle during the hop


def test_operator_matrix_impurity_bruteforce_two_particles():
    basis = build_basis(3, 2)
    ours = operator_matrix(OperatorId.impurity(), basis).to_dense()
    ref = oracles.matrix_of_terms(
        oracles.basis_tuples(basis), oracles.impurity_terms(0, 2, {1}, 1.0)
    )
    assert np.array_equal(ours, ref)


def test_operator_matrices_hermitian_and_normalized():
    for n_particles in (1, 2):
        basis = build_basis(4, n_particles)
        for op in (OperatorId.hop(1), OperatorId.hop(2), OperatorId.impurity()):
            dense = operator_matrix(op, basis).to_dense()
            assert np.abs(dense - dense.conj().T).max() == 0.0
            norm = np.abs(np.linalg.eigvalsh(dense)).max()
            assert abs(norm - 1.0) < 1e-10


def test_circuit_unitary_empty_is_identity():
    basis = build_basis(4, 2)
    u = circuit_unitary(Circuit(4, ()), basis)
    assert np.array_equal(u, np.eye(6, dtype=complex))


def test_circuit_unitary_single_gate_vs_expm_oracle():
    basis = build_basis(4, 1)
    theta = 2 * math.pi
    u = circuit_unitary(Circuit(4, (Instruction(OperatorId.hop(1), theta),)), basis)
    gen = operator_matrix(OperatorId.hop(1), basis).to_dense()
    ref = expm(-1j * theta / 2 * gen)
    assert np.abs(u - ref).max() < 1e-12


def test_circuit_unitary_same_generator_angles_add():
    basis = build_basis(4, 2)
    two = Circuit(4, (Instruction(OperatorId.hop(1), 0.7), Instruction(OperatorId.hop(1), 0.5)))
    one = Circuit(4, (Instruction(OperatorId.hop(1), 1.2),))
    assert np.abs(circuit_unitary(two, basis) - circuit_unitary(one, basis)).max() < 1e-13


def test_circuit_unitary_order_first_instruction_acts_first():
    basis = build_basis(4, 2)
    a = Instruction(OperatorId.hop(1), 0.9)
    b = Instruction(OperatorId.impurity(), 1.3)
    u_ab = circuit_unitary(Circuit(4, (a, b)), basis)
    mat_a = operator_matrix(a.op, basis).to_dense()
    mat_b = operator_matrix(b.op, basis).to_dense()
    ref = expm(-1j * b.theta / 2 * mat_b) @ expm(-1j * a.theta / 2 * mat_a)
    assert np.abs(u_ab - ref).max() < 1e-12


def test_circuit_reversal_inverts():
    basis = build_basis(4, 2)
    insts = (
        Instruction(OperatorId.hop(1), 0.8),
        Instruction(OperatorId.impurity(), -1.1),
        Instruction(OperatorId.hop(2), 2.3),
    )
    forward = circuit_unitary(Circuit(4, insts), basis)
    back = circuit_unitary(
        Circuit(4, tuple(Instruction(i.op, -i.theta) for i in reversed(insts))), basis
    )
    assert np.abs(back @ forward - np.eye(basis.dimension)).max() < 1e-10


def test_circuit_unitary_is_unitary():
    basis = build_basis(4, 2)
    insts = tuple(
        Instruction(op, th)
        for op, th in [(OperatorId.hop(1), 1.0), (OperatorId.hop(2), -2.0), (OperatorId.impurity(), 0.3)]
    )
    u = circuit_unitary(Circuit(4, insts), basis)
    assert np.abs(u @ u.conj().T - np.eye(basis.dimension)).max() < 1e-12


def test_rx_zero_is_identity():
    assert np.abs(rx(0.0) - np.eye(2)).max() < 1e-15


def test_rxx_unitary():
    gate = rxx(math.pi / 2)
    assert np.abs(gate @ gate.conj().T - np.eye(4)).max() <= 1e-14


def test_cnot_identity():
    result = cnot_identity_check()
    assert result.residual <= 1e-12
    assert result.residual_phase_optimized <= result.residual
    assert result.mode == "exact"
    # the variant with the trailing Y rotation on the target qubit is not CNOT
    assert result.as_written_residual > 0.4


def test_operator_id_validation():
    with pytest.raises(ValueError):
        OperatorId.hop(0).validate(4)
    with pytest.raises(ValueError):
        OperatorId.hop(3).validate(4)
    OperatorId.hop(2).validate(4)
    with pytest.raises(ValueError):
        Circuit(2, (Instruction(OperatorId.impurity(), 0.5),))
