"""Gaussian pulse schedules, periodic extensions, and Fourier coefficient tables.

A circuit of S instructions over total time P becomes S Gaussian pulses, one
per window ``[mu*P/S, (mu+1)*P/S)``, centered mid-window with shared width c.
Each pulse is normalized so its windowed area is theta/2, which makes the
windowed schedule generate exactly the circuit's gate product.

Removing the windows and summing all periodic images of each Gaussian yields
smooth P-periodic coefficient functions whose Fourier series converge fast;
truncating at order M gives the band-limited coefficient functions used by
the downstream static-Hamiltonian construction.

Fourier convention (normative here): coefficient ``(1/P) int_0^P e^{-i 2 pi m t / P} f(t) dt``,
reconstruction ``sum_m e^{+i 2 pi m t / P} coeff(m)``.  Reconstruction is
checked against the extended functions directly, so the convention is pinned
by tests rather than by notation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate
from scipy.special import erf

from .circuit import Circuit, OperatorId

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class GaussianPulse:
    """One windowed Gaussian: index mu, angle theta, width c over period P."""

    index: int
    angle: float
    n_pulses: int
    period: float
    width: float

    def __post_init__(self):
        if self.period <= 0 or self.width <= 0:
            raise ValueError("period and width must be positive")
        if not 0 <= self.index < self.n_pulses:
            raise ValueError("pulse index out of range")

    @property
    def center(self) -> float:
        return (self.index + 0.5) * self.period / self.n_pulses

    @property
    def amplitude(self) -> float:
        """Area factor X: windowed integral of the pulse equals angle/2."""
        window_half = self.period / (2.0 * self.n_pulses)
        return self.angle / (2.0 * erf(window_half / (math.sqrt(2.0) * self.width)))


def pulse_value(pulse: GaussianPulse, t: np.ndarray | float) -> np.ndarray | float:
    """X / (sqrt(2 pi) c) * exp(-(t - center)^2 / (2 c^2))."""
    t = np.asarray(t, dtype=float)
    c = pulse.width
    peak = pulse.amplitude / (_SQRT_2PI * c)
    out = peak * np.exp(-((t - pulse.center) ** 2) / (2.0 * c * c))
    return out if out.ndim else float(out)


def image_count(pulse: GaussianPulse, tail_tol: float) -> int:
    """Smallest L with the omitted |l| > L lattice images summing below tail_tol.

    For t reduced into [0, P) every omitted image is at distance >= (|l|-1) P
    from the center, so the tail is bounded by a fast geometric-Gaussian sum.
    """
    if tail_tol <= 0:
        raise ValueError("tail_tol must be positive")
    c, p = pulse.width, pulse.period
    peak = abs(pulse.amplitude) / (_SQRT_2PI * c)
    if peak == 0.0:
        return 1
    for level in range(1, 65):
        lead = peak * math.exp(-((level * p) ** 2) / (2.0 * c * c))
        ratio = math.exp(-((2 * level + 1) * p * p) / (2.0 * c * c))
        if ratio < 1.0 and 2.0 * lead / (1.0 - ratio) < tail_tol:
            return level
    raise ValueError("periodic extension tail does not truncate; width too large vs period")


def pulse_extended(
    pulse: GaussianPulse, t: np.ndarray | float, tail_tol: float = 1e-14
) -> np.ndarray | float:
    """P-periodic lattice sum of the pulse, truncated below tail_tol."""
    t = np.asarray(t, dtype=float)
    reduced = t - pulse.period * np.floor(t / pulse.period)
    level = image_count(pulse, tail_tol)
    shifts = np.arange(-level, level + 1) * pulse.period
    out = pulse_value(pulse, reduced[..., None] + shifts).sum(axis=-1)
    return out if out.ndim else float(out)


def pulse_images(
    pulse: GaussianPulse, t: np.ndarray | float, tail_tol: float = 1e-14
) -> np.ndarray | float:
    """Sum of the l != 0 images only: the extension's excess over the bare pulse.

    Computed without subtracting near-equal quantities, so it stays accurate
    when the excess is many orders below the peak.
    """
    t = np.asarray(t, dtype=float)
    reduced = t - pulse.period * np.floor(t / pulse.period)
    level = image_count(pulse, tail_tol)
    shifts = np.arange(-level, level + 1) * pulse.period
    shifts = shifts[shifts != 0.0]
    out = pulse_value(pulse, reduced[..., None] + shifts).sum(axis=-1)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class PulseSchedule:
    """All pulses of a circuit, sharing period and width, ordered by window."""

    period: float
    width: float
    pulses: tuple[GaussianPulse, ...]
    operator_ids: tuple[OperatorId, ...]

    def __post_init__(self):
        if len(self.pulses) != len(self.operator_ids):
            raise ValueError("one operator id per pulse required")
        for mu, pulse in enumerate(self.pulses):
            if pulse.index != mu or pulse.period != self.period or pulse.width != self.width:
                raise ValueError("pulses must be window-ordered and share period and width")

    @property
    def n_pulses(self) -> int:
        return len(self.pulses)

    @cached_property
    def boundaries(self) -> np.ndarray:
        """Window edges mu * P / S for mu = 0..S, computed once and reused
        everywhere so boundary membership is bitwise consistent."""
        s = max(self.n_pulses, 1)
        return np.array([mu * self.period / s for mu in range(s + 1)])

    def distinct_operators(self) -> tuple[OperatorId, ...]:
        return tuple(sorted(set(self.operator_ids)))

    def window_index(self, t: np.ndarray) -> np.ndarray:
        """Half-open window membership: t == boundary belongs to the right window."""
        return np.searchsorted(self.boundaries, np.asarray(t, dtype=float), side="right") - 1

    @staticmethod
    def from_circuit(circ: Circuit, period: float, width: float) -> "PulseSchedule":
        s = circ.n_instructions
        pulses = tuple(
            GaussianPulse(index=mu, angle=inst.theta, n_pulses=s, period=period, width=width)
            for mu, inst in enumerate(circ.instructions)
        )
        return PulseSchedule(
            period=period,
            width=width,
            pulses=pulses,
            operator_ids=tuple(inst.op for inst in circ.instructions),
        )


@dataclass(frozen=True)
class FourierTable:
    """Per-operator Fourier coefficients for m in [-order, order].

    Rows are indexed m + order.  Operators without pulses simply have no row;
    their coefficients are zero.  The period travels with the table because
    the coefficients are meaningless without it.
    """

    order: int
    period: float
    coeffs: dict[OperatorId, np.ndarray]

    def __post_init__(self):
        width = 2 * self.order + 1
        for op, row in self.coeffs.items():
            if row.shape != (width,):
                raise ValueError(f"row for {op} has shape {row.shape}, expected ({width},)")
            flipped = np.conj(row[::-1])
            if np.abs(row - flipped).max() > 1e-12 * max(1.0, np.abs(row).max()):
                raise ValueError(f"row for {op} violates conjugate symmetry")

    def operator_ids(self) -> tuple[OperatorId, ...]:
        return tuple(sorted(self.coeffs))

    def coefficient(self, op: OperatorId, m: int) -> complex:
        if abs(m) > self.order:
            raise ValueError(f"|m| = {abs(m)} exceeds order {self.order}")
        row = self.coeffs.get(op)
        return complex(row[m + self.order]) if row is not None else 0j

    def row(self, op: OperatorId) -> np.ndarray:
        row = self.coeffs.get(op)
        if row is None:
            return np.zeros(2 * self.order + 1, dtype=complex)
        return row.copy()

    def reconstruct(self, op: OperatorId, t: np.ndarray | float) -> np.ndarray | float:
        """sum_m e^{+i 2 pi m t / P} coeff(m); imaginary residue checked then dropped."""
        t = np.asarray(t, dtype=float)
        ms = np.arange(-self.order, self.order + 1)
        phases = np.exp(2j * math.pi * np.multiply.outer(t, ms) / self.period)
        total = phases @ self.row(op)
        scale = max(1.0, float(np.abs(total).max(initial=0.0)))
        if np.abs(total.imag).max(initial=0.0) > 1e-10 * scale:
            raise ValueError("truncated coefficient function has non-negligible imaginary part")
        out = total.real
        return out if out.ndim else float(out)

    def dressed(self, t: float) -> "FourierTable":
        """Coefficients at interaction-picture time t: coeff(m) -> coeff(m) e^{+i 2 pi m t / P}."""
        ms = np.arange(-self.order, self.order + 1)
        phase = np.exp(2j * math.pi * ms * t / self.period)
        return FourierTable(
            order=self.order,
            period=self.period,
            coeffs={op: row * phase for op, row in self.coeffs.items()},
        )


def fourier_coefficient_closed(pulse: GaussianPulse, m: int) -> complex:
    """(X/P) exp(-2 pi^2 m^2 c^2 / P^2) exp(-i 2 pi m center / P).

    Closed form of the defining integral: periodization unfolds to the full
    real-line Gaussian transform.
    """
    p, c = pulse.period, pulse.width
    decay = math.exp(-2.0 * math.pi**2 * m * m * c * c / (p * p))
    phase = np.exp(-2j * math.pi * m * pulse.center / p)
    return complex(pulse.amplitude / p * decay * phase)


def fourier_coefficient_quadrature(pulse: GaussianPulse, m: int, tol: float = 1e-12) -> complex:
    """Adaptive quadrature of (1/P) int_0^P e^{-i 2 pi m t / P} h_ext(t) dt.

    Serves as the independent oracle for the closed form.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    p = pulse.period
    omega = 2.0 * math.pi * m / p

    def real_part(t):
        return math.cos(omega * t) * pulse_extended(pulse, t, tail_tol=min(tol, 1e-14) * 1e-2)

    def imag_part(t):
        return -math.sin(omega * t) * pulse_extended(pulse, t, tail_tol=min(tol, 1e-14) * 1e-2)

    interior = [pulse.center] if 0.0 < pulse.center < p else None
    pieces = []
    for f in (real_part, imag_part):
        value, err = integrate.quad(f, 0.0, p, points=interior, limit=200, epsabs=tol * 1e-2, epsrel=tol * 1e-2)
        if err > tol:
            raise RuntimeError(f"quadrature did not reach tol={tol} (estimated error {err})")
        pieces.append(value)
    return complex(pieces[0], pieces[1]) / p


def build_fourier_table(sched: PulseSchedule, order: int) -> FourierTable:
    """Sum closed-form pulse coefficients per operator; rows keep conjugate symmetry."""
    if order < 0:
        raise ValueError("order must be >= 0")
    coeffs: dict[OperatorId, np.ndarray] = {}
    for op in sched.distinct_operators():
        row = np.zeros(2 * order + 1, dtype=complex)
        for pulse, pulse_op in zip(sched.pulses, sched.operator_ids):
            if pulse_op != op:
                continue
            for m in range(-order, order + 1):
                row[m + order] += fourier_coefficient_closed(pulse, m)
        coeffs[op] = row
    return FourierTable(order=order, period=sched.period, coeffs=coeffs)


def coefficient_function(
    sched: PulseSchedule,
    op: OperatorId,
    t: np.ndarray | float,
    variant: str,
    table: FourierTable | None = None,
    tail_tol: float = 1e-14,
) -> np.ndarray | float:
    """Scalar weight of one operator at time t.

    variant 'bc': windowed pulses (half-open windows, defined on [0, P));
    'diff': periodic extensions; 'trunc': Fourier reconstruction from table.
    """
    t_arr = np.asarray(t, dtype=float)
    if variant == "trunc":
        if table is None:
            raise ValueError("variant 'trunc' needs a FourierTable")
        out = table.reconstruct(op, t_arr)
        return out if np.ndim(t) else float(out)
    out = np.zeros_like(t_arr)
    if variant == "bc":
        window = sched.window_index(t_arr)
        for mu, (pulse, pulse_op) in enumerate(zip(sched.pulses, sched.operator_ids)):
            if pulse_op != op:
                continue
            mask = window == mu
            if np.any(mask):
                out[mask] += pulse_value(pulse, t_arr[mask])
    elif variant == "diff":
        for pulse, pulse_op in zip(sched.pulses, sched.operator_ids):
            if pulse_op == op:
                out += pulse_extended(pulse, t_arr, tail_tol=tail_tol)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return out if out.ndim else float(out)
