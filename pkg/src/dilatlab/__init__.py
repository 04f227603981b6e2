"""Dilatation mapping between an interacting electron gas and an ion-trap simulator.

Submodules: ``mapping`` (scale factors), ``model`` (grid Hamiltonians),
``dilatation`` (S(r) on wavefunctions), ``evolve`` (propagation and the
propagator identity), ``readout`` (Fourier spectroscopy of records),
``qpe`` (phase-estimation readout) and ``cli``.
"""
from .mapping import (
    ATOMIC,
    ION_MASS_RATIOS,
    SI,
    DilatationMap,
    PotentialSpec,
    UnitSystem,
    derive_dilatation,
    map_for_species,
    scale_external_potential,
    scale_time,
)
from .model import (
    GridSpec,
    HamiltonianOperator,
    SystemSpec,
    WaveFunction,
    build_hamiltonian,
    gaussian,
    initial_state,
    ion_trap_spec,
    soft_coulomb,
)
from .dilatation import apply_dilatation, apply_dilatation_via_generator, momentum_transform_check
from .evolve import EigenSolution, PropagationPlan, Trajectory, eigensolve, propagate, verify_propagator_identity
from .readout import Observable, extract_spectrum, match_peaks, record
from .qpe import QpeConfig, iqft, phases_to_energies, qpe_distribution, qpe_run

__version__ = "0.1.0"
