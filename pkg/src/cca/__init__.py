"""Quantum-state transfer in staggered, modular and atom-coupled cavity arrays."""

from .errors import CcaError, ConfigError, NoBoundPairError, RegimeError, ZeroGapError
from .lattice import (
    HoppingMatrix,
    ModularSpec,
    ParityBlocks,
    StaggeredSpec,
    UniformBulkSpec,
    build_field,
    build_modular,
    build_staggered,
    build_uniform_bulk,
    parity_reduce,
)
from .spectral import (
    BoundStatePair,
    SpectralDecomposition,
    analytic_band_energy,
    analytic_bound_mode,
    analytic_unbound_state,
    band_gap,
    diagonalize,
    end_to_end_amplitude,
    identify_bound_pair,
    innermost_pair,
    perturbative_bound_pair,
    perturbative_bound_states,
)
from .dynamics import (
    AmplitudeSeries,
    TimeGrid,
    average_fidelity,
    evolve_amplitude,
    peak_search,
    rabi_amplitude,
    site_probabilities,
    transfer_time,
)
from .jch import (
    JchMatrix,
    JchSpec,
    atomic_transfer,
    build_jch,
    classify_regime,
    effective_resonant_hamiltonian,
    normal_mode_decompose,
    polariton_transfer,
)

__version__ = "0.1.0"
