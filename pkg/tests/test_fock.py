"""fock module against the brute-force second-quantization oracle."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from impcompile import fock
from impcompile.fock import (
    ModeIndex,
    SparseHermitian,
    build_basis,
    hopping_term,
    impurity_term,
    number_term,
)

import oracles


def dense(term):
    return term.to_dense()


def test_basis_sizes():
    assert build_basis(4, 0).dimension == 1
    assert build_basis(4, 2).dimension == 6
    assert build_basis(20, 2).dimension == 190


def test_basis_sorted_and_index_inverse():
    basis = build_basis(5, 3)
    states = basis.states
    assert np.all(np.diff(states) > 0)
    for i in range(basis.dimension):
        assert basis.index(int(states[i])) == i
    with pytest.raises(KeyError):
        basis.index(0)  # vacuum not in the 3-particle sector


def test_basis_guards():
    with pytest.raises(ValueError):
        build_basis(63, 1)
    with pytest.raises(ValueError):
        build_basis(62, 31)  # dimension overflow
    with pytest.raises(ValueError):
        build_basis(4, 5)


def test_mode_index_ordinal():
    assert ModeIndex(1, 0).ordinal(0) == 0
    assert ModeIndex(2, 0).ordinal(0) == 1
    # flattened (column-1)*(2M+1) + ring + M
    assert ModeIndex(1, -2).ordinal(2) == 0
    assert ModeIndex(3, 1).ordinal(2) == 2 * 5 + 3
    with pytest.raises(ValueError):
        ModeIndex(1, 3).ordinal(2)


def test_hopping_single_particle_two_modes():
    basis = build_basis(2, 1)
    mat = dense(hopping_term(basis, 0, 1, 1.0))
    assert np.array_equal(mat, np.array([[0, 1], [1, 0]], dtype=complex))


def test_hopping_sign_through_occupied_mode():
    # moving between modes 0 and 2 with mode 1 occupied flips the sign
    basis = build_basis(3, 2)
    amp = 0.8 - 0.3j
    mat = dense(hopping_term(basis, 0, 2, amp))
    col = basis.index(0b110)  # modes 1,2 occupied
    row = basis.index(0b011)  # modes 0,1 occupied
    assert mat[row, col] == -amp


def test_hopping_matches_bruteforce_3mode_2particle():
    basis = build_basis(3, 2)
    states = oracles.basis_tuples(basis)
    for (a, b) in [(0, 1), (0, 2), (1, 2)]:
        amp = 0.7 + 0.2j
        ours = dense(hopping_term(basis, a, b, amp))
        ref = oracles.matrix_of_terms(states, oracles.hopping_terms(a, b, amp))
        assert np.array_equal(ours, ref)


def test_hopping_imaginary_amp_hermitian():
    basis = build_basis(3, 1)
    mat = dense(hopping_term(basis, 0, 1, 1j))
    assert np.abs(mat - mat.conj().T).max() == 0.0
    assert np.abs(mat.real).max() == 0.0


def test_hopping_swap_conjugate():
    basis = build_basis(4, 2)
    amp = 0.4 - 1.1j
    assert np.array_equal(
        dense(hopping_term(basis, 1, 3, amp)), dense(hopping_term(basis, 3, 1, np.conj(amp)))
    )


def test_number_term_cases():
    vac = build_basis(3, 0)
    assert dense(number_term(vac, 1, 2.0)).shape == (1, 1)
    assert dense(number_term(vac, 1, 2.0))[0, 0] == 0.0
    full = build_basis(3, 3)
    assert dense(number_term(full, 2, 1.5))[0, 0] == 1.5
    basis = build_basis(4, 2)
    mat = dense(number_term(basis, 2, 1.0))
    for i in range(basis.dimension):
        assert mat[i, i] == float((int(basis.states[i]) >> 2) & 1)


def test_impurity_reduces_to_hopping_without_density():
    basis = build_basis(4, 2)
    amp = 0.5 + 0.1j
    assert np.array_equal(
        dense(impurity_term(basis, 0, 3, set(), amp)), dense(hopping_term(basis, 0, 3, amp))
    )


def test_impurity_sign_flip_when_density_occupied():
    basis = build_basis(3, 2)
    amp = 1.0
    hop = dense(hopping_term(basis, 0, 2, amp))
    imp = dense(impurity_term(basis, 0, 2, {1}, amp))
    col = basis.index(0b110)
    row = basis.index(0b011)
    assert imp[row, col] == -hop[row, col]


def test_impurity_matches_bruteforce():
    basis = build_basis(3, 2)
    states = oracles.basis_tuples(basis)
    amp = 0.9 - 0.4j
    ours = dense(impurity_term(basis, 0, 2, {1}, amp))
    ref = oracles.matrix_of_terms(states, oracles.impurity_terms(0, 2, {1}, amp))
    assert np.array_equal(ours, ref)


def test_impurity_rejects_overlapping_modes():
    basis = build_basis(4, 2)
    with pytest.raises(ValueError):
        impurity_term(basis, 0, 2, {0}, 1.0)


def test_jw_composition_matches_bruteforce():
    # product of two single-hop matrices equals the brute-force composite
    basis = build_basis(4, 2)
    states = oracles.basis_tuples(basis)
    first = dense(hopping_term(basis, 0, 1, 1.0))
    second = dense(hopping_term(basis, 1, 3, 1.0))
    composite_terms = []
    for c1, ops1 in oracles.hopping_terms(1, 3, 1.0):
        for c2, ops2 in oracles.hopping_terms(0, 1, 1.0):
            composite_terms.append((c1 * c2, ops1 + ops2))
    ref = oracles.matrix_of_terms(states, composite_terms)
    assert np.abs(second @ first - ref).max() < 1e-14


@settings(max_examples=40, deadline=None)
@given(
    modes=st.integers(min_value=2, max_value=4),
    data=st.data(),
)
def test_hopping_bruteforce_property(modes, data):
    n = data.draw(st.integers(min_value=0, max_value=modes))
    a = data.draw(st.integers(min_value=0, max_value=modes - 1))
    b = data.draw(st.integers(min_value=0, max_value=modes - 1).filter(lambda x: x != a))
    re = data.draw(st.floats(min_value=-2, max_value=2, allow_nan=False))
    im = data.draw(st.floats(min_value=-2, max_value=2, allow_nan=False))
    basis = build_basis(modes, n)
    ours = dense(hopping_term(basis, a, b, complex(re, im)))
    ref = oracles.matrix_of_terms(
        oracles.basis_tuples(basis), oracles.hopping_terms(a, b, complex(re, im))
    )
    assert np.array_equal(ours, ref)


def test_sparse_hermitian_storage_rules():
    mat = SparseHermitian(3)
    mat.add(0, 1, 1.0 + 2.0j)
    with pytest.raises(ValueError):
        mat.add(1, 0, 1.0)
    with pytest.raises(ValueError):
        mat.add(2, 2, 1.0 + 1.0j)
    mat.add(2, 2, 4.0)
    dense_mat = mat.to_dense()
    assert np.abs(dense_mat - dense_mat.conj().T).max() == 0.0
    assert mat.nnz == 2
    # exact cancellation removes the entry
    mat.add(0, 1, -(1.0 + 2.0j))
    assert mat.nnz == 1


def test_sparse_apply_matches_dense():
    basis = build_basis(4, 2)
    term = hopping_term(basis, 0, 3, 0.3 + 0.7j)
    rng = np.random.default_rng(3)
    vec = rng.normal(size=basis.dimension) + 1j * rng.normal(size=basis.dimension)
    assert np.abs(term.apply(vec) - term.to_dense() @ vec).max() < 1e-14


def test_combine_weights_and_errors():
    basis = build_basis(3, 1)
    h1 = hopping_term(basis, 0, 1, 1.0)
    h2 = hopping_term(basis, 1, 2, 1.0)
    total = fock.combine([h1, h2], [2.0, -0.5])
    assert np.abs(total.to_dense() - (2.0 * h1.to_dense() - 0.5 * h2.to_dense())).max() == 0.0
    with pytest.raises(ValueError):
        h1.scaled(1.0 + 1.0j)


def test_number_conservation_by_construction():
    # every generated entry connects states of equal particle number: the
    # builders act within a sector basis, so row and column states always
    # share popcount
    basis = build_basis(4, 2)
    term = impurity_term(basis, 0, 3, {1, 2}, 1.0 + 0.5j)
    for row, col, _ in term.entries():
        row_state = int(basis.states[row])
        col_state = int(basis.states[col])
        assert bin(row_state).count("1") == bin(col_state).count("1") == 2
