"""Gate sequences over fermionic generators, their text format, and reference unitaries.

A circuit on N modes is an ordered list of instructions, each pairing a
Hermitian generator with an angle: the sequence realizes the product of
``exp(-i theta/2 * O)`` factors, the first instruction acting first on the
state (so it is the rightmost matrix factor).

Generators are either nearest-neighbour hops ``c^+_j c_{j+1} + h.c.`` for
``1 <= j <= N-2`` or the quartic impurity operator
``(1 - 2 n_{N-1}) (c^+_{N-2} c_N + h.c.)`` that couples the two modes
adjacent to mode N-1 while flipping sign with its occupation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fock, propagators
from .fock import SectorBasis, SparseHermitian


class CircuitFormatError(ValueError):
    """Raised for malformed circuit text; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True, order=True)
class OperatorId:
    """Identifies a generator: kind 'hop' with a site, or the single 'imp'."""

    kind: str
    site: int = 0

    @staticmethod
    def hop(site: int) -> "OperatorId":
        return OperatorId("hop", site)

    @staticmethod
    def impurity() -> "OperatorId":
        return OperatorId("imp", 0)

    def validate(self, n_modes: int) -> None:
        if self.kind == "hop":
            if not 1 <= self.site <= n_modes - 2:
                raise ValueError(f"hop site {self.site} outside [1, {n_modes - 2}] for {n_modes} modes")
        elif self.kind == "imp":
            if n_modes < 3:
                raise ValueError("impurity operator needs at least 3 modes")
        else:
            raise ValueError(f"unknown operator kind {self.kind!r}")

    def __str__(self) -> str:
        return f"hop_{self.site}" if self.kind == "hop" else "imp"


@dataclass(frozen=True)
class Instruction:
    op: OperatorId
    theta: float

    def __post_init__(self):
        if not math.isfinite(self.theta):
            raise ValueError(f"angle must be finite, got {self.theta}")


@dataclass(frozen=True)
class Circuit:
    """Ordered instruction list over n_modes >= 3 fermionic modes."""

    n_modes: int
    instructions: tuple[Instruction, ...]

    def __post_init__(self):
        if self.n_modes < 3:
            raise ValueError(f"need at least 3 modes, got {self.n_modes}")
        for inst in self.instructions:
            inst.op.validate(self.n_modes)

    @property
    def n_instructions(self) -> int:
        return len(self.instructions)

    def distinct_operators(self) -> tuple[OperatorId, ...]:
        return tuple(sorted({inst.op for inst in self.instructions}))


def theta_mod_4pi(theta: float) -> float:
    """Reduce an angle into [0, 4*pi); exp(-i theta/2 O) has period 4*pi."""
    return theta % (4.0 * math.pi)


def parse_circuit(text: str) -> Circuit:
    """Parse the line-oriented circuit format.

    Grammar: ``# comment``, ``n_modes <N>``, ``hop <j> <theta>``,
    ``imp <theta>``; whitespace-separated, decimal floats.  ``n_modes``
    must appear once, before any instruction.
    """
    n_modes: int | None = None
    instructions: list[Instruction] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        key = parts[0]
        try:
            if key == "n_modes":
                if n_modes is not None:
                    raise CircuitFormatError(line_no, "duplicate n_modes")
                if len(parts) != 2:
                    raise CircuitFormatError(line_no, "expected: n_modes <N>")
                n_modes = int(parts[1])
                if n_modes < 3:
                    raise CircuitFormatError(line_no, f"n_modes must be >= 3, got {n_modes}")
            elif key == "hop":
                if n_modes is None:
                    raise CircuitFormatError(line_no, "n_modes must come before instructions")
                if len(parts) != 3:
                    raise CircuitFormatError(line_no, "expected: hop <site> <theta>")
                site = int(parts[1])
                op = OperatorId.hop(site)
                try:
                    op.validate(n_modes)
                except ValueError as exc:
                    raise CircuitFormatError(line_no, str(exc)) from None
                instructions.append(Instruction(op, float(parts[2])))
            elif key == "imp":
                if n_modes is None:
                    raise CircuitFormatError(line_no, "n_modes must come before instructions")
                if len(parts) != 2:
                    raise CircuitFormatError(line_no, "expected: imp <theta>")
                instructions.append(Instruction(OperatorId.impurity(), float(parts[1])))
            else:
                raise CircuitFormatError(line_no, f"unknown directive {key!r}")
        except (ValueError, OverflowError) as exc:
            if isinstance(exc, CircuitFormatError):
                raise
            raise CircuitFormatError(line_no, f"bad number in {line!r}") from None
    if n_modes is None:
        raise CircuitFormatError(0, "missing n_modes")
    if not instructions:
        raise CircuitFormatError(0, "circuit has no instructions")
    return Circuit(n_modes=n_modes, instructions=tuple(instructions))


def operator_matrix(op: OperatorId, basis: SectorBasis) -> SparseHermitian:
    """Generator matrix in the occupation basis, Jordan-Wigner signs included.

    Validates against the basis mode count only (a hop needs both its modes,
    the impurity needs three); the stricter circuit-level site range lives on
    :class:`Circuit`.
    """
    n_modes = basis.mode_count
    if op.kind == "hop":
        if not 1 <= op.site <= n_modes - 1:
            raise ValueError(f"hop site {op.site} needs modes {op.site},{op.site + 1} in a {n_modes}-mode basis")
        return fock.hopping_term(basis, op.site - 1, op.site, 1.0)
    if op.kind != "imp":
        raise ValueError(f"unknown operator kind {op.kind!r}")
    if n_modes < 3:
        raise ValueError("impurity operator needs at least 3 modes")
    # impurity couples modes N-2 and N through the density of mode N-1
    return fock.impurity_term(basis, n_modes - 3, n_modes - 1, {n_modes - 2}, 1.0)


def circuit_unitary(circ: Circuit, basis: SectorBasis) -> np.ndarray:
    """Exact product of gate exponentials; first instruction is the rightmost factor."""
    mats = {op: operator_matrix(op, basis).to_dense() for op in circ.distinct_operators()}
    u = np.eye(basis.dimension, dtype=complex)
    for inst in circ.instructions:
        u = propagators.expm_hermitian(mats[inst.op], inst.theta / 2.0) @ u
    return u


# --- qubit gates and the CNOT decomposition check ---------------------------

_PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
_PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
_CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


def _rotation(pauli: np.ndarray, theta: float) -> np.ndarray:
    return propagators.expm_hermitian(pauli, theta / 2.0)


def rx(theta: float) -> np.ndarray:
    return _rotation(_PAULI_X, theta)


def ry(theta: float) -> np.ndarray:
    return _rotation(_PAULI_Y, theta)


def rz(theta: float) -> np.ndarray:
    return _rotation(_PAULI_Z, theta)


def rxx(theta: float) -> np.ndarray:
    return _rotation(np.kron(_PAULI_X, _PAULI_X), theta)


def _on_qubit(gate: np.ndarray, qubit: int) -> np.ndarray:
    eye = np.eye(2, dtype=complex)
    return np.kron(gate, eye) if qubit == 1 else np.kron(eye, gate)


@dataclass(frozen=True)
class CnotCheckResult:
    residual: float
    residual_phase_optimized: float
    mode: str  # 'exact' if the raw residual already meets 1e-12
    as_written_residual: float

    def __float__(self) -> float:
        return self.residual


def cnot_identity_check() -> CnotCheckResult:
    """Distance of the XX-conjugation decomposition from the standard CNOT.

    CNOT (control = qubit 1) factors into X rotations and an XX interaction,
    conjugated by Y rotations *on the control qubit*:

        CNOT = e^{-i pi/4} RY1(-pi/2) RX1(-pi/2) RX2(-pi/2) RXX(pi/2) RY1(pi/2)

    A widely circulated variant places the trailing Y rotation on qubit 2;
    that product is at max-norm distance 0.5 from CNOT under every sign,
    ordering, and global-phase convention, so the conjugation reading is the
    correct one.  Its residual is reported alongside for transparency.
    """
    half = math.pi / 2.0
    phase = np.exp(-1j * math.pi / 4.0)

    core = _on_qubit(ry(-half), 1) @ _on_qubit(rx(-half), 1) @ _on_qubit(rx(-half), 2) @ rxx(half)
    decomposition = phase * core @ _on_qubit(ry(half), 1)
    as_written = phase * core @ _on_qubit(ry(half), 2)

    residual = float(np.abs(decomposition - _CNOT).max())
    tr = np.trace(_CNOT.conj().T @ decomposition)
    opt_phase = -np.angle(tr) if tr != 0 else 0.0
    residual_opt = float(np.abs(np.exp(1j * opt_phase) * decomposition - _CNOT).max())
    mode = "exact" if residual <= 1e-12 else "global_phase"
    return CnotCheckResult(
        residual=residual,
        residual_phase_optimized=min(residual, residual_opt),
        mode=mode,
        as_written_residual=float(np.abs(as_written - _CNOT).max()),
    )
