"""Quantum Otto cycle with a driven chiral three-level molecule as working medium."""

from .spectral import (
    Chirality,
    ControlParameter,
    ControlPath,
    DriveParameters,
    PairingMode,
    Spectrum,
    build_hamiltonian,
    eigensystem,
    min_gap_along_path,
    pair_endpoint_states,
    spectrum_along_path,
)
from .thermo import (
    BathSpec,
    Regime,
    classify_regime,
    efficiency,
    fidelity,
    gibbs_populations,
    gibbs_state,
    heat_cold,
    heat_hot,
    work_net,
)
from .lindblad import (
    BasisMode,
    build_jump_operators,
    evolve,
    lindblad_rhs,
    thermalization_trace,
)
from .cycle import (
    CycleConfig,
    CycleRecord,
    PopulationReference,
    discriminate,
    efficiency_vs_phase,
    run_cycle,
    sweep_detuning,
    sweep_phase,
)

__version__ = "0.1.0"

__all__ = [
    "Chirality",
    "ControlParameter",
    "ControlPath",
    "DriveParameters",
    "PairingMode",
    "Spectrum",
    "build_hamiltonian",
    "eigensystem",
    "min_gap_along_path",
    "pair_endpoint_states",
    "spectrum_along_path",
    "BathSpec",
    "Regime",
    "classify_regime",
    "efficiency",
    "fidelity",
    "gibbs_populations",
    "gibbs_state",
    "heat_cold",
    "heat_hot",
    "work_net",
    "BasisMode",
    "build_jump_operators",
    "evolve",
    "lindblad_rhs",
    "thermalization_trace",
    "CycleConfig",
    "CycleRecord",
    "PopulationReference",
    "discriminate",
    "efficiency_vs_phase",
    "run_cycle",
    "sweep_detuning",
    "sweep_phase",
]
