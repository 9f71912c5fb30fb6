"""Sector Hamiltonians: windowed, extended, truncated, and the static cylinder form.

The three time-dependent Hamiltonians share one shape, a real scalar weight
per generator:

    H(t) = sum_j f_j(t) * hop_j + g(t) * impurity

differing only in which coefficient functions they use (windowed pulses,
periodic extensions, or Fourier truncations).

The static cylinder Hamiltonian replaces each mode by a ring of 2M+1 modes.
Per column j it carries a frequency ladder ``(2 pi / P) sum_r r n_{j,r}``,
and couples neighbouring columns with ring-translation-invariant hops whose
circulant coefficients are the Fourier table rows: coefficient ``f^(m)``
attaches to ``c^+_{j,r} c_{j+1, r-m}`` (ring indices wrapped mod 2M+1).
With the table convention ``coeff(m) = (1/P) int e^{-i 2 pi m t/P} f``,
the minus sign is what makes the ladder's interaction picture dress the
``f^(m)`` term with ``e^{+i 2 pi m t / P}``, i.e. reproduce the truncated
coefficient functions on the zero-momentum sector; this is pinned by the
matrix-element identity test rather than by convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from . import fock
from .circuit import OperatorId, operator_matrix
from .fock import ModeIndex, SectorBasis, SparseHermitian
from .pulses import FourierTable, PulseSchedule, coefficient_function


@dataclass
class TimeDependentHamiltonian:
    """H(t) = sum_i coefficient_i(t) * term_i over a fixed sector basis.

    ``coefficients`` maps an array of times to a real (n_terms, n_times)
    array; evaluator closures hold only immutable data, so concurrent
    evaluation at distinct times is safe.
    """

    period: float
    smoothness: str  # 'piecewise' | 'smooth'
    basis: SectorBasis
    operator_ids: tuple[OperatorId, ...]
    terms: tuple[SparseHermitian, ...]
    coefficients: Callable[[np.ndarray], np.ndarray]
    segment_edges: np.ndarray | None = None  # kink locations for integrators

    @property
    def dimension(self) -> int:
        return self.basis.dimension

    @cached_property
    def dense_terms(self) -> np.ndarray:
        return np.stack([term.to_dense() for term in self.terms])

    @cached_property
    def term_norms(self) -> np.ndarray:
        """Spectral norm of each term, for integrator step-size bounds."""
        return np.array([np.abs(np.linalg.eigvalsh(m)).max() for m in self.dense_terms])

    def evaluator(self, t: float) -> SparseHermitian:
        weights = self.coefficients(np.array([float(t)]))[:, 0]
        return fock.combine(list(self.terms), [float(w) for w in weights])

    def dense(self, t: float) -> np.ndarray:
        weights = self.coefficients(np.array([float(t)]))[:, 0]
        return np.tensordot(weights, self.dense_terms, axes=1)


def _schedule_hamiltonian(
    sched: PulseSchedule,
    basis: SectorBasis,
    variant: str,
    table: FourierTable | None = None,
) -> TimeDependentHamiltonian:
    ops = sched.distinct_operators()
    terms = tuple(operator_matrix(op, basis) for op in ops)

    def coefficients(ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        out = np.empty((len(ops), ts.size))
        for i, op in enumerate(ops):
            out[i] = coefficient_function(sched, op, ts.ravel(), variant, table=table)
        return out

    return TimeDependentHamiltonian(
        period=sched.period,
        smoothness="piecewise" if variant == "bc" else "smooth",
        basis=basis,
        operator_ids=ops,
        terms=terms,
        coefficients=coefficients,
        segment_edges=sched.boundaries if variant == "bc" else None,
    )


def build_H_BC(sched: PulseSchedule, basis: SectorBasis) -> TimeDependentHamiltonian:
    """Windowed-pulse Hamiltonian; exactly one generator active at any t in [0, P)."""
    return _schedule_hamiltonian(sched, basis, "bc")


def build_H_diff(sched: PulseSchedule, basis: SectorBasis) -> TimeDependentHamiltonian:
    """Smooth periodic Hamiltonian from the pulses' lattice-sum extensions."""
    return _schedule_hamiltonian(sched, basis, "diff")


def build_H_tr(
    sched: PulseSchedule, table: FourierTable, basis: SectorBasis
) -> TimeDependentHamiltonian:
    """Band-limited Hamiltonian from the truncated coefficient functions."""
    if table.period != sched.period:
        raise ValueError("table period does not match schedule period")
    return _schedule_hamiltonian(sched, basis, "trunc", table=table)


# --- static cylinder Hamiltonian ---------------------------------------------


@dataclass(frozen=True)
class ImpurityCoupling:
    """Quartic part: hop pairs across the density column, times (1 - 2 N_density)."""

    pairs: dict[tuple[ModeIndex, ModeIndex], complex]
    density_column: int


@dataclass(frozen=True)
class HamiltonianSpec:
    """Mode-indexed description of a cylinder operator.

    ``quadratic`` maps (a, b) -> amplitude of ``c^+_a c_b`` and must be
    conjugate-symmetric under index swap; ``static_diagonal`` carries the
    frequency-ladder weights separately so the ladder can be included or
    excluded when transforming.
    """

    n_columns: int
    order: int
    quadratic: dict[tuple[ModeIndex, ModeIndex], complex]
    impurity: ImpurityCoupling | None = None
    static_diagonal: dict[ModeIndex, float] | None = None

    @property
    def mode_count(self) -> int:
        return self.n_columns * (2 * self.order + 1)

    def validate(self) -> None:
        for (a, b), amp in self.quadratic.items():
            mirror = self.quadratic.get((b, a))
            if mirror is None or abs(np.conj(mirror) - amp) > 1e-12 * max(1.0, abs(amp)):
                raise ValueError(f"quadratic map not conjugate-symmetric at {(a, b)}")
        if self.impurity is not None:
            for (a, b) in self.impurity.pairs:
                if self.impurity.density_column in (a.column, b.column):
                    raise ValueError("impurity density column coincides with a hop column")
                mirror = self.impurity.pairs.get((b, a))
                if mirror is None or abs(np.conj(mirror) - self.impurity.pairs[(a, b)]) > 1e-12:
                    raise ValueError(f"impurity pair map not conjugate-symmetric at {(a, b)}")


def wrap_ring(value: int, order: int) -> int:
    """Map an integer into [-order, order] modulo the ring size 2*order+1."""
    width = 2 * order + 1
    return (value + order) % width - order


def build_h_ind_spec(
    n_modes: int,
    order: int,
    table: FourierTable,
    include_static_diagonal: bool = True,
) -> HamiltonianSpec:
    """Cylinder operator from a Fourier table.

    Ladder: (2 pi / P) r on every mode (all columns; leaving the impurity
    columns without ladder weights breaks the interaction-picture phases of
    the quartic term).  Hops: f_j^(m) on (j, r) -> (j+1, wrap(r - m)); the
    quartic term couples columns N-2 and N through the density of column N-1.
    """
    if table.order != order:
        raise ValueError("table order does not match requested ring order")
    quadratic: dict[tuple[ModeIndex, ModeIndex], complex] = {}
    for j in range(1, n_modes - 1):
        row = table.coeffs.get(OperatorId.hop(j))
        if row is None:
            continue
        for m in range(-order, order + 1):
            amp = complex(row[m + order])
            if amp == 0j:
                continue
            for r in range(-order, order + 1):
                a = ModeIndex(j, r)
                b = ModeIndex(j + 1, wrap_ring(r - m, order))
                quadratic[(a, b)] = quadratic.get((a, b), 0j) + amp
                quadratic[(b, a)] = quadratic.get((b, a), 0j) + np.conj(amp)
    impurity = None
    imp_row = table.coeffs.get(OperatorId.impurity())
    if imp_row is not None and np.abs(imp_row).max() > 0.0:
        pairs: dict[tuple[ModeIndex, ModeIndex], complex] = {}
        for m in range(-order, order + 1):
            amp = complex(imp_row[m + order])
            if amp == 0j:
                continue
            for r in range(-order, order + 1):
                a = ModeIndex(n_modes - 2, r)
                b = ModeIndex(n_modes, wrap_ring(r - m, order))
                pairs[(a, b)] = pairs.get((a, b), 0j) + amp
                pairs[(b, a)] = pairs.get((b, a), 0j) + np.conj(amp)
        impurity = ImpurityCoupling(pairs=pairs, density_column=n_modes - 1)
    static_diagonal = None
    if include_static_diagonal:
        scale = 2.0 * math.pi / table.period
        static_diagonal = {
            ModeIndex(j, r): scale * r
            for j in range(1, n_modes + 1)
            for r in range(-order, order + 1)
        }
    return HamiltonianSpec(
        n_columns=n_modes,
        order=order,
        quadratic=quadratic,
        impurity=impurity,
        static_diagonal=static_diagonal,
    )


def spec_matrix(spec: HamiltonianSpec, basis: SectorBasis) -> SparseHermitian:
    """Assemble the sector matrix of a HamiltonianSpec."""
    if basis.mode_count != spec.mode_count:
        raise ValueError(
            f"basis has {basis.mode_count} modes, spec needs {spec.mode_count}"
        )
    order = spec.order
    total = SparseHermitian(basis.dimension)
    if spec.static_diagonal:
        for mode in sorted(spec.static_diagonal):
            weight = spec.static_diagonal[mode]
            if weight != 0.0:
                total = total + fock.number_term(basis, mode.ordinal(order), weight)
    # upper-ordinal entries only; the stored mirror is the Hermitian partner
    for (a, b) in sorted(spec.quadratic):
        oa, ob = a.ordinal(order), b.ordinal(order)
        amp = spec.quadratic[(a, b)]
        if amp == 0j:
            continue
        if oa < ob:
            total = total + fock.hopping_term(basis, oa, ob, amp)
        elif oa == ob:
            if abs(amp.imag) > 1e-12 * max(1.0, abs(amp)):
                raise ValueError("diagonal quadratic entry must be real")
            total = total + fock.number_term(basis, oa, amp.real)
    if spec.impurity is not None:
        width = 2 * order + 1
        density = {
            ModeIndex(spec.impurity.density_column, r).ordinal(order)
            for r in range(-order, order + 1)
        }
        for (a, b) in sorted(spec.impurity.pairs):
            oa, ob = a.ordinal(order), b.ordinal(order)
            amp = spec.impurity.pairs[(a, b)]
            if amp == 0j or oa >= ob:
                continue
            total = total + fock.impurity_term(basis, oa, ob, density, amp)
    return total


def build_H_ind(
    n_modes: int, order: int, table: FourierTable, basis: SectorBasis
) -> SparseHermitian:
    """Sector matrix of the full static cylinder Hamiltonian."""
    return spec_matrix(build_h_ind_spec(n_modes, order, table), basis)


# --- ring-momentum rotation and the zero-momentum sector ---------------------


def momentum_rotation(order: int) -> np.ndarray:
    """Single-column rotation F with F[k, r] = e^{i 2 pi k r / (2M+1)} / sqrt(2M+1)."""
    width = 2 * order + 1
    idx = np.arange(-order, order + 1)
    return np.exp(2j * math.pi * np.outer(idx, idx) / width) / math.sqrt(width)


def _single_particle_matrix(spec: HamiltonianSpec) -> np.ndarray:
    dim = spec.mode_count
    mat = np.zeros((dim, dim), dtype=complex)
    for (a, b), amp in spec.quadratic.items():
        mat[a.ordinal(spec.order), b.ordinal(spec.order)] += amp
    if spec.static_diagonal:
        for mode, weight in spec.static_diagonal.items():
            mat[mode.ordinal(spec.order), mode.ordinal(spec.order)] += weight
    return mat


def _matrix_to_quadratic(mat: np.ndarray, n_columns: int, order: int, cutoff: float = 0.0):
    width = 2 * order + 1
    out: dict[tuple[ModeIndex, ModeIndex], complex] = {}
    for oa in range(mat.shape[0]):
        for ob in range(mat.shape[1]):
            amp = complex(mat[oa, ob])
            if abs(amp) <= cutoff:
                continue
            a = ModeIndex(oa // width + 1, oa % width - order)
            b = ModeIndex(ob // width + 1, ob % width - order)
            out[(a, b)] = amp
    return out


def momentum_transform(
    spec: HamiltonianSpec, n_modes: int, order: int, inverse: bool = False
) -> HamiltonianSpec:
    """Conjugate all coupling amplitudes by the per-column momentum rotation.

    Under the rotation, every creation operator mixes as
    ``c^+_{j,r} -> sum_k conj(F[k, r]) c^+_{j,k}``, so a coefficient matrix h
    becomes ``conj(F) h conj(F)^+`` (blockwise per column).  The quartic
    term's hop-pair block transforms the same way; the density factor is a
    whole-column number operator and is invariant.  The ladder diagonal, when
    present, folds into the output ``quadratic`` because its transform is no
    longer diagonal.
    """
    if spec.n_columns != n_modes or spec.order != order:
        raise ValueError("spec shape does not match n_modes/order")
    rot = momentum_rotation(order)
    block = rot.conj() if not inverse else rot.T
    full = np.kron(np.eye(n_modes), block)
    quad = full @ _single_particle_matrix(spec) @ full.conj().T
    impurity = None
    if spec.impurity is not None:
        width = 2 * order + 1
        cols = sorted({a.column for (a, _) in spec.impurity.pairs} | {b.column for (_, b) in spec.impurity.pairs})
        if len(cols) != 2:
            raise ValueError("impurity hop pairs must couple exactly two columns")
        left, right = cols
        small = np.zeros((width, width), dtype=complex)
        for (a, b), amp in spec.impurity.pairs.items():
            if a.column == left:
                small[a.ring + order, b.ring + order] += amp
        rotated = block @ small @ block.conj().T
        pairs: dict[tuple[ModeIndex, ModeIndex], complex] = {}
        for ra in range(width):
            for rb in range(width):
                amp = complex(rotated[ra, rb])
                if amp == 0j:
                    continue
                a = ModeIndex(left, ra - order)
                b = ModeIndex(right, rb - order)
                pairs[(a, b)] = amp
                pairs[(b, a)] = np.conj(amp)
        impurity = ImpurityCoupling(pairs=pairs, density_column=spec.impurity.density_column)
    return HamiltonianSpec(
        n_columns=n_modes,
        order=order,
        quadratic=_matrix_to_quadratic(quad, n_modes, order),
        impurity=impurity,
        static_diagonal=None,
    )


def conserved_charge(basis: SectorBasis, n_modes: int, order: int, k: int) -> SparseHermitian:
    """Occupation count of momentum-k modes across all columns (diagonal)."""
    if abs(k) > order:
        raise ValueError(f"momentum {k} outside [-{order}, {order}]")
    if basis.mode_count != n_modes * (2 * order + 1):
        raise ValueError("basis size does not match n_modes/order")
    out = SparseHermitian(basis.dimension)
    ordinals = [ModeIndex(j, k).ordinal(order) for j in range(1, n_modes + 1)]
    for pos in range(basis.dimension):
        state = int(basis.states[pos])
        count = sum((state >> o) & 1 for o in ordinals)
        if count:
            out.add(pos, pos, complex(count))
    return out


def embed_isometry(small_basis: SectorBasis, big_basis: SectorBasis) -> np.ndarray:
    """Isometry sending each N-mode state to the same pattern on k=0 modes.

    Momentum interpretation of the ring index: column j's k=0 mode embeds at
    ordinal (j-1)(2M+1) + M.  Zero-momentum modes inherit the column order,
    so no reordering sign appears.
    """
    n_modes = small_basis.mode_count
    if big_basis.mode_count % n_modes != 0:
        raise ValueError("big basis mode count is not a multiple of the small one")
    width = big_basis.mode_count // n_modes
    if width % 2 == 0:
        raise ValueError("ring size must be odd (2*order+1)")
    order = (width - 1) // 2
    if big_basis.n_particles != small_basis.n_particles:
        raise ValueError("particle numbers differ between bases")
    out = np.zeros((big_basis.dimension, small_basis.dimension))
    for i in range(small_basis.dimension):
        small_state = int(small_basis.states[i])
        big_state = 0
        for j in range(n_modes):
            if (small_state >> j) & 1:
                big_state |= 1 << (j * width + order)
        out[big_basis.index(big_state), i] = 1.0
    return out


def embed_k0(state: np.ndarray, small_basis: SectorBasis, big_basis: SectorBasis) -> np.ndarray:
    """Embed a small-sector state vector into the k=0 modes of the cylinder sector."""
    state = np.asarray(state)
    if state.shape != (small_basis.dimension,):
        raise ValueError("state length does not match the small basis")
    return embed_isometry(small_basis, big_basis) @ state
