"""Precision limits for single-parameter Hamiltonian estimation.

The package computes classical and quantum Fisher information for
finite-dimensional unitary models, evaluates the precision bound of
controlled energy measurements together with its saturating control and
preparation, and simulates the realistic phase-estimation implementation of
such measurements.
"""

from .controlled import (
    AuxiliaryModel,
    GBoundReport,
    OptimizerSettings,
    aux_fi,
    auxiliary_model,
    cem_povm,
    equioriented,
    g_bound,
    lemma1_maximizer,
    maximize_fi,
)
from .fisher import (
    Povm,
    ProbDist,
    SupportBoundaryError,
    classical_fi,
    cqfi,
    density_matrix,
    optimal_bc_preparation,
    outcome_dist,
    projective_povm,
    qfi_pure,
    sld,
    state_vector,
)
from .hamiltonians import (
    BUILTIN_FAMILIES,
    NV_PHYSICAL_PARAMS,
    GaugeMatchError,
    GeneratorPair,
    HamiltonianFamily,
    diagonalizer,
    energy_levels,
    evolution,
    generator_of_diagonalizer,
    generator_of_evolution,
    generator_pair,
    make_family,
    nv_center,
    phase_parameter,
    qubit_angle,
    qubit_component,
    transported_diagonalizers,
)
from .linalg import (
    DegenerateSpectrumError,
    SpectralData,
    as_hermitian,
    check_unitary,
    eigendecompose,
    herm_exp,
    kron,
    partial_trace,
    random_hermitian,
    random_ket,
    random_unitary,
    spectral_gap,
)
from .pea import (
    CIRCUIT_DIM_GUARD,
    ControllizationFactors,
    PeaConfig,
    ResourceLimitError,
    controlled_evolution,
    controllization_error,
    controllization_factors,
    controllization_step,
    pea_fi,
    pea_probs_controllized,
    pea_probs_ideal,
    pea_simulate_circuit,
)
from .sweeps import (
    ComputationError,
    ConfigError,
    ExperimentConfig,
    LemmaRecord,
    RunResult,
    SweepRecord,
    dump_family,
    load_config,
    load_custom_family,
    run,
    write_result,
)
from .tolerances import PROFILES, Tolerances, active, use_profile

__version__ = "0.1.0"
