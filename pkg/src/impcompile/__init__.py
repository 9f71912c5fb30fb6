"""impcompile: lower gate sequences to a static impurity Hamiltonian and verify each step.

The chain: an instruction list becomes a schedule of windowed Gaussian
pulses whose exact evolution is the gate product; removing the windows
gives smooth periodic coefficient functions; truncating their Fourier
series gives a band-limited evolution; and a static Hamiltonian on a
cylinder lattice (one ring of modes per original mode) reproduces the
band-limited dynamics on its zero-momentum sector.  Analytic bounds cover
the first two approximations and are checked against measured distances.
"""

from .circuit import (
    Circuit,
    CircuitFormatError,
    CnotCheckResult,
    Instruction,
    OperatorId,
    circuit_unitary,
    cnot_identity_check,
    operator_matrix,
    parse_circuit,
)
from .fock import ModeIndex, SectorBasis, SparseHermitian, build_basis
from .hamiltonians import (
    HamiltonianSpec,
    ImpurityCoupling,
    TimeDependentHamiltonian,
    build_H_BC,
    build_H_diff,
    build_H_ind,
    build_H_tr,
    build_h_ind_spec,
    conserved_charge,
    embed_isometry,
    embed_k0,
    momentum_transform,
    spec_matrix,
)
from .propagators import (
    ConvergenceError,
    DistanceResult,
    PropagationResult,
    expm_hermitian,
    midpoint_product,
    piecewise_exact,
    timeordered,
    unitary_distance,
)
from .pulses import (
    FourierTable,
    GaussianPulse,
    PulseSchedule,
    build_fourier_table,
    coefficient_function,
    fourier_coefficient_closed,
    fourier_coefficient_quadrature,
    pulse_extended,
    pulse_value,
)
from .analysis import (
    ErrorBudget,
    SelectedParameters,
    SweepResult,
    e_area_bound,
    e_fourier_bound,
    fourier_coeff_bound,
    instance_norms,
    l1_area_measure,
    m_sweep,
    make_budget,
    measure_pipeline,
    opnorm_time_integral,
    select_parameters,
)

__version__ = "0.1.0"
