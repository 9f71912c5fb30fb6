"""Fixed-particle-number fermionic occupation bases and sparse Hermitian operators.

States are occupation bitmasks over a global mode order; mode ``i`` is bit ``i``.
For cylinder systems the global order is the flattened (column, ring) ordinal,
see :class:`ModeIndex`.  All Jordan-Wigner signs derive from this single order:
moving a fermion between two modes picks up the parity of the occupied modes
strictly between them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterator, NamedTuple

import numpy as np

MAX_MODES = 62
MAX_STATES = 2_000_000


class ModeIndex(NamedTuple):
    """A mode on the cylinder: 1-based column, ring offset in [-order, order]."""

    column: int
    ring: int = 0

    def ordinal(self, order: int) -> int:
        """Global 0-based position: columns outer, ring inner."""
        width = 2 * order + 1
        if not 1 <= self.column:
            raise ValueError(f"column must be >= 1, got {self.column}")
        if abs(self.ring) > order:
            raise ValueError(f"ring offset {self.ring} outside [-{order}, {order}]")
        return (self.column - 1) * width + (self.ring + order)


@dataclass(frozen=True)
class SectorBasis:
    """All occupation states with a fixed particle number, sorted ascending."""

    mode_count: int
    n_particles: int
    states: np.ndarray = field(repr=False)  # int64 bitmasks, sorted

    @property
    def dimension(self) -> int:
        return len(self.states)

    def index(self, state: int) -> int:
        """Ordinal of a bitmask in the basis."""
        pos = int(np.searchsorted(self.states, state))
        if pos >= len(self.states) or self.states[pos] != state:
            raise KeyError(f"state {state:#x} not in sector basis")
        return pos

    def occupations(self, position: int) -> tuple[int, ...]:
        """Occupied mode ordinals of a basis state, ascending."""
        s = int(self.states[position])
        return tuple(i for i in range(self.mode_count) if (s >> i) & 1)


def build_basis(mode_count: int, n_particles: int) -> SectorBasis:
    """Enumerate the fixed-number sector.

    Refuses more than ``MAX_MODES`` modes (bitmask width) or sectors larger
    than ``MAX_STATES`` (dense propagators downstream).
    """
    if not 0 <= n_particles <= mode_count:
        raise ValueError(f"need 0 <= n_particles <= mode_count, got {n_particles}, {mode_count}")
    if mode_count > MAX_MODES:
        raise ValueError(f"mode_count {mode_count} exceeds limit {MAX_MODES}")
    size = math.comb(mode_count, n_particles)
    if size > MAX_STATES:
        raise ValueError(f"sector dimension {size} exceeds guard {MAX_STATES}")
    masks = np.fromiter(
        (sum(1 << i for i in combo) for combo in combinations(range(mode_count), n_particles)),
        dtype=np.int64,
        count=size,
    )
    masks.sort()
    return SectorBasis(mode_count=mode_count, n_particles=n_particles, states=masks)


class SparseHermitian:
    """Hermitian matrix stored as upper-triangle entries (row <= col).

    The mirrored lower triangle is implied, so reconstruction is Hermitian
    exactly.  Entry iteration and dense assembly run in sorted (row, col)
    order, fixing the floating-point summation order.
    """

    def __init__(self, dimension: int):
        self.dimension = dimension
        self._entries: dict[tuple[int, int], complex] = {}

    def add(self, row: int, col: int, value: complex) -> None:
        if row > col:
            raise ValueError("upper-triangle storage requires row <= col")
        if row == col:
            if value.imag != 0.0:
                if abs(value.imag) > 1e-12 * max(1.0, abs(value.real)):
                    raise ValueError(f"diagonal entry ({row},{row}) not real: {value}")
                value = complex(value.real, 0.0)
        acc = self._entries.get((row, col), 0j) + value
        if acc == 0j:
            self._entries.pop((row, col), None)
        else:
            self._entries[(row, col)] = acc

    def entries(self) -> Iterator[tuple[int, int, complex]]:
        for (row, col) in sorted(self._entries):
            yield row, col, self._entries[(row, col)]

    @property
    def nnz(self) -> int:
        return len(self._entries)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.dimension, self.dimension), dtype=complex)
        for row, col, val in self.entries():
            out[row, col] += val
            if row != col:
                out[col, row] += np.conj(val)
        return out

    def apply(self, vec: np.ndarray) -> np.ndarray:
        if vec.shape[-1] != self.dimension:
            raise ValueError("vector length does not match operator dimension")
        out = np.zeros_like(vec, dtype=complex)
        for row, col, val in self.entries():
            out[row] += val * vec[col]
            if row != col:
                out[col] += np.conj(val) * vec[row]
        return out

    def max_abs(self) -> float:
        return max((abs(v) for v in self._entries.values()), default=0.0)

    def scaled(self, factor: float) -> "SparseHermitian":
        """Scale by a real factor (complex factors would break Hermiticity)."""
        if isinstance(factor, complex) and factor.imag != 0.0:
            raise ValueError("only real scaling preserves Hermiticity")
        out = SparseHermitian(self.dimension)
        for (row, col), val in self._entries.items():
            out._entries[(row, col)] = val * float(factor)
        return out

    def __add__(self, other: "SparseHermitian") -> "SparseHermitian":
        if self.dimension != other.dimension:
            raise ValueError("dimension mismatch")
        out = SparseHermitian(self.dimension)
        out._entries = dict(self._entries)
        for (row, col), val in other._entries.items():
            out.add(row, col, val)
        return out


def combine(terms: list[SparseHermitian], weights: list[float]) -> SparseHermitian:
    """Real-weighted sum of Hermitian terms, in the given (fixed) order."""
    if not terms:
        raise ValueError("no terms")
    out = SparseHermitian(terms[0].dimension)
    for term, w in zip(terms, weights):
        if term.dimension != out.dimension:
            raise ValueError("dimension mismatch")
        for (row, col), val in term._entries.items():
            out.add(row, col, val * float(w))
    return out


def _between_parity(state: int, a: int, b: int) -> int:
    """(-1)^(occupied modes strictly between a and b) as +1/-1."""
    lo, hi = (a, b) if a < b else (b, a)
    if hi - lo < 2:
        return 1
    mask = ((1 << hi) - 1) ^ ((1 << (lo + 1)) - 1)
    return -1 if bin(state & mask).count("1") & 1 else 1


def hopping_term(basis: SectorBasis, a: int, b: int, amp: complex) -> SparseHermitian:
    """amp * c^+_a c_b + conj(amp) * c^+_b c_a with Jordan-Wigner signs.

    Modes are 0-based global ordinals.
    """
    if a == b:
        raise ValueError("hopping needs two distinct modes; use number_term for densities")
    for m in (a, b):
        if not 0 <= m < basis.mode_count:
            raise ValueError(f"mode {m} out of range for {basis.mode_count}-mode basis")
    out = SparseHermitian(basis.dimension)
    amp = complex(amp)
    if amp == 0j:
        return out
    states = basis.states
    for col in range(basis.dimension):
        s = int(states[col])
        # apply amp * c^+_a c_b only; the conjugate term supplies the mirror
        if (s >> b) & 1 and not (s >> a) & 1:
            t = s ^ (1 << b) ^ (1 << a)
            row = basis.index(t)
            val = amp * _between_parity(s, a, b)
            if row <= col:
                out.add(row, col, val)
            else:
                out.add(col, row, np.conj(val))
    return out


def number_term(basis: SectorBasis, a: int, weight: float) -> SparseHermitian:
    """weight * n_a, diagonal."""
    if not 0 <= a < basis.mode_count:
        raise ValueError(f"mode {a} out of range for {basis.mode_count}-mode basis")
    out = SparseHermitian(basis.dimension)
    if weight == 0.0:
        return out
    for col in range(basis.dimension):
        if (int(basis.states[col]) >> a) & 1:
            out.add(col, col, complex(weight))
    return out


def impurity_term(
    basis: SectorBasis,
    hop_a: int,
    hop_b: int,
    density_modes: set[int],
    amp: complex,
) -> SparseHermitian:
    """(amp * c^+_a c_b + h.c.) * (1 - 2 * sum_p n_p) over disjoint density modes.

    The factors commute because the density modes are disjoint from the hop
    modes, so the product is ordering-free and Hermitian.
    """
    if hop_a in density_modes or hop_b in density_modes:
        raise ValueError("density modes must be disjoint from the hop modes")
    if hop_a == hop_b:
        raise ValueError("hop modes must differ")
    for m in (hop_a, hop_b, *density_modes):
        if not 0 <= m < basis.mode_count:
            raise ValueError(f"mode {m} out of range for {basis.mode_count}-mode basis")
    out = SparseHermitian(basis.dimension)
    amp = complex(amp)
    if amp == 0j:
        return out
    states = basis.states
    for col in range(basis.dimension):
        s = int(states[col])
        if (s >> hop_b) & 1 and not (s >> hop_a) & 1:
            occupied = sum((s >> p) & 1 for p in density_modes)
            factor = 1.0 - 2.0 * occupied
            t = s ^ (1 << hop_b) ^ (1 << hop_a)
            row = basis.index(t)
            val = amp * _between_parity(s, hop_a, hop_b) * factor
            if row <= col:
                out.add(row, col, val)
            else:
                out.add(col, row, np.conj(val))
    return out
