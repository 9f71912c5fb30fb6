"""Independent brute-force second quantization for cross-checking fock operators.

States are ascending tuples of occupied modes, read as c^+_{m1} ... c^+_{mk}
applied to the vacuum with m1 < ... < mk.  Creation and annihilation track
signs by explicit anticommutation (counting operators passed during
insertion or removal), with no bitmask parity shortcuts, so agreement with
the production code is a genuine two-route check.
"""

from __future__ import annotations

import numpy as np

Monomial = list[tuple[str, int]]  # [('cdag', mode) | ('c', mode)], applied right to left
Term = tuple[complex, Monomial]


def create(state: tuple[int, ...], mode: int):
    if mode in state:
        return None
    pos = sum(1 for m in state if m < mode)
    sign = -1 if pos % 2 else 1
    return sign, tuple(sorted(state + (mode,)))


def annihilate(state: tuple[int, ...], mode: int):
    if mode not in state:
        return None
    pos = state.index(mode)
    sign = -1 if pos % 2 else 1
    return sign, tuple(m for m in state if m != mode)


def apply_monomial(state: tuple[int, ...], ops: Monomial):
    sign = 1
    current = state
    for kind, mode in reversed(ops):
        step = create(current, mode) if kind == "cdag" else annihilate(current, mode)
        if step is None:
            return None
        factor, current = step
        sign *= factor
    return sign, current


def matrix_of_terms(states: list[tuple[int, ...]], terms: list[Term]) -> np.ndarray:
    index = {s: i for i, s in enumerate(states)}
    out = np.zeros((len(states), len(states)), dtype=complex)
    for col, state in enumerate(states):
        for coeff, ops in terms:
            result = apply_monomial(state, ops)
            if result is None:
                continue
            sign, final = result
            out[index[final], col] += coeff * sign
    return out


def hopping_terms(a: int, b: int, amp: complex) -> list[Term]:
    return [
        (complex(amp), [("cdag", a), ("c", b)]),
        (complex(np.conj(amp)), [("cdag", b), ("c", a)]),
    ]


def number_terms(a: int, weight: float) -> list[Term]:
    return [(complex(weight), [("cdag", a), ("c", a)])]


def impurity_terms(a: int, b: int, density_modes, amp: complex) -> list[Term]:
    """(amp c^+_a c_b + h.c.) (1 - 2 sum_p n_p), expanded into monomials."""
    out = hopping_terms(a, b, amp)
    for coeff, ops in list(out):
        for p in sorted(density_modes):
            out.append((-2.0 * coeff, ops + [("cdag", p), ("c", p)]))
    return out


def basis_tuples(basis) -> list[tuple[int, ...]]:
    """Occupation tuples of a SectorBasis, in basis order."""
    return [basis.occupations(i) for i in range(basis.dimension)]
