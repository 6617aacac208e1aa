"""Enantioselective state transfer in cyclic three-level systems.

Design microwave three-wave-mixing pulse sequences from the cyclic
pulse-area theorem, verify the closed-form transfer conditions, and check
everything against exact RK4 propagation of the full oscillating-field
Hamiltonian (no rotating-wave approximation), including a four-level
spectator guard model.
"""

from .analytic import (
    analytic_final_populations,
    stage1_state,
    stage2_state_targetB,
    stage2_state_targetC,
)
from .areas import (
    ComplexArea,
    ConditionReport,
    DesignSpec,
    complex_area,
    condition_residuals,
    design_amplitudes,
    design_phases,
    designed_pulses,
    detuning_compensation,
    loop_phase_target,
    realize_phase,
    stage_areas,
)
from .config import (
    ConfigError,
    RunSpec,
    load_config,
    parse_config,
    resolve_grid,
    serialize_config,
)
from .experiments import (
    DetuningResult,
    SweepResult,
    read_snapshot,
    sweep_delays,
    sweep_detuning,
    sweep_phase_duration,
    trace_populations,
    write_detuning_csv,
    write_landscape_csv,
    write_trace_csv,
)
from .model import (
    CYCLOHEXYLMETHANOL,
    PRESETS,
    CouplingEdge,
    Handedness,
    LevelBasis,
    MoleculeSpec,
    SpectatorSpec,
    basis_for_levels,
    coupling_matrix_3,
    coupling_matrix_4,
    four_level_basis,
    get_preset,
    interaction_picture_matrix,
    loop_closure_residual,
    loop_couplings,
    mhz_to_rad_per_ns,
    three_level_basis,
)
from .propagator import (
    GridConfig,
    GridTooCoarseError,
    NumericalGuardError,
    Trajectory,
    available_backends,
    default_grid,
    norm_drift,
    populations,
    propagate,
    resolve_backend,
    trace_table,
)
from .pulses import (
    PhaseConvention,
    Pulse,
    envelope,
    field,
    spectral_amplitude,
    support_window,
)

__version__ = "0.1.0"

__all__ = [
    "CYCLOHEXYLMETHANOL",
    "ComplexArea",
    "ConditionReport",
    "ConfigError",
    "CouplingEdge",
    "DesignSpec",
    "DetuningResult",
    "GridConfig",
    "GridTooCoarseError",
    "Handedness",
    "LevelBasis",
    "MoleculeSpec",
    "NumericalGuardError",
    "PRESETS",
    "PhaseConvention",
    "Pulse",
    "RunSpec",
    "SpectatorSpec",
    "SweepResult",
    "Trajectory",
    "analytic_final_populations",
    "available_backends",
    "basis_for_levels",
    "complex_area",
    "condition_residuals",
    "coupling_matrix_3",
    "coupling_matrix_4",
    "default_grid",
    "design_amplitudes",
    "design_phases",
    "designed_pulses",
    "detuning_compensation",
    "envelope",
    "field",
    "four_level_basis",
    "get_preset",
    "interaction_picture_matrix",
    "load_config",
    "loop_closure_residual",
    "loop_couplings",
    "loop_phase_target",
    "mhz_to_rad_per_ns",
    "norm_drift",
    "parse_config",
    "populations",
    "propagate",
    "read_snapshot",
    "realize_phase",
    "resolve_backend",
    "resolve_grid",
    "serialize_config",
    "spectral_amplitude",
    "stage1_state",
    "stage2_state_targetB",
    "stage2_state_targetC",
    "stage_areas",
    "support_window",
    "sweep_delays",
    "sweep_detuning",
    "sweep_phase_duration",
    "three_level_basis",
    "trace_populations",
    "trace_table",
    "write_detuning_csv",
    "write_landscape_csv",
    "write_trace_csv",
]
