"""Pulse shaping and sideband-dynamics benchmarks for motional-mode probes.

The package synthesizes Fourier-basis probe pulses that null cross-mode
coupling and stabilize against mode-frequency drift, simulates the resulting
blue-sideband dynamics under the full multi-mode and the single-mode fitting
models, and quantifies the fractional population error between them across
parameter sweeps.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .errors import (
    DegenerateReferenceError,
    FockCutoffError,
    InfeasibleBasisError,
    IntegrationError,
    ModeshapeError,
    NoSignalError,
    QuadratureError,
    ValidationError,
)
from .modes import (
    CHAIN_SPACINGS_KHZ,
    ModeSpec,
    load_mode_spec,
    mode_spec_to_dict,
    save_mode_spec,
    synthesize_chain,
    with_detuning,
)
from .pulses import (
    DEFAULT_WINDOW,
    BasisGrid,
    Pulse,
    average_rabi,
    build_basis,
    evaluate,
    load_pulse,
    save_pulse,
    square_pulse,
)
from .magnus import (
    MagnusReport,
    detuning_shift,
    magnus_report,
    phase_integral,
    quadrature_theta1,
    quadrature_theta2,
    theta1,
    theta1_derivative,
    theta2,
)
from .shaper import (
    PulseSolution,
    ShapeRequest,
    build_constraint_matrix,
    intersect_subspaces,
    maximize_signal,
    null_second_order,
    null_space,
    save_solution,
    solve_pulse,
)
from .dynamics import (
    SimConfig,
    QuantumState,
    bright_population,
    evolve,
    hamiltonian_at,
    populations,
    populations_report,
)
from .metrics import (
    ErrorPoint,
    error_at,
    fractional_error,
    predict_population,
    shots_required,
    square_probe,
)
from .bench import (
    BestPulseMap,
    ScalingRow,
    SweepPlan,
    SweepRow,
    SweepTable,
    best_pulse_map,
    emit_csv,
    emit_error_landscape,
    emit_plot,
    emit_scaling_csv,
    run_sweep,
    scaling_study,
)
from .reference import three_ion_chain, three_ion_chain_dict

__all__ = [name for name in dir() if not name.startswith("_")]
