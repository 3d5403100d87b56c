"""Stroboscopic two-stroke quantum engines on qudit chains.

The package simulates engines that alternate a heat stroke — boundary
sites collide with fresh thermal ancillas — with a work stroke — unitary
evolution under the chain's internal coupling.  It provides exact
density-matrix simulation with per-cycle energy bookkeeping, limit-cycle
solvers, a closed-form treatment of the two-qubit engine, parameter
sweeps, and a CLI for config-driven runs.
"""

from .errors import (
    ConsistencyError,
    ConvergenceError,
    DegenerateFixedPointError,
    LayoutError,
    ParameterError,
    SpecError,
    TwoStrokeError,
)
from .hilbert import (
    DensityMatrix,
    HermitianOperator,
    SpaceLayout,
    embed_operator,
    evolve_unitary,
    expectation,
    partial_trace,
    tensor_compose,
    thermal_state,
    trace_distance,
    von_neumann_entropy,
)
from .engine import (
    BathSpec,
    EngineSpec,
    ExplicitCoupling,
    PartialSwapCoupling,
    SiteSpec,
    XYZCoupling,
    build_heat_hamiltonian,
    build_work_hamiltonian,
    check_strict_energy_conservation,
    load_config,
    qubit_chain,
    qubit_site,
    spec_from_json,
    spec_to_json,
    with_durations,
)
from .simulate import (
    CycleLedger,
    CycleRecord,
    LimitCycleReport,
    OttoCheck,
    StrokeOutcome,
    classify_regime,
    find_limit_cycle,
    ground_start,
    heat_stroke,
    limit_cycle_thermo,
    otto_check,
    run_cycles,
    thermal_start,
    work_stroke,
)
from .analytic import (
    AffineMapPair,
    AnalyticParams,
    ObservableVector,
    build_affine_maps,
    derive_params,
    from_engine_spec,
    heat_map,
    observables_from_state,
    relaxation_rate,
    steady_state,
    steady_state_thermo,
    trajectory,
    work_closed_form,
    work_map,
)
from .sweep import (
    SweepAxis,
    SweepPlan,
    SweepResult,
    plan_from_config,
    run_sweep,
    verify,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "TwoStrokeError",
    "LayoutError",
    "ParameterError",
    "SpecError",
    "ConvergenceError",
    "DegenerateFixedPointError",
    "ConsistencyError",
    # state-space primitives
    "SpaceLayout",
    "HermitianOperator",
    "DensityMatrix",
    "tensor_compose",
    "partial_trace",
    "thermal_state",
    "evolve_unitary",
    "von_neumann_entropy",
    "embed_operator",
    "expectation",
    "trace_distance",
    # engine specification
    "SiteSpec",
    "BathSpec",
    "PartialSwapCoupling",
    "XYZCoupling",
    "ExplicitCoupling",
    "EngineSpec",
    "qubit_site",
    "qubit_chain",
    "build_work_hamiltonian",
    "build_heat_hamiltonian",
    "check_strict_energy_conservation",
    "spec_from_json",
    "spec_to_json",
    "load_config",
    "with_durations",
    # simulation
    "StrokeOutcome",
    "heat_stroke",
    "work_stroke",
    "thermal_start",
    "ground_start",
    "CycleRecord",
    "CycleLedger",
    "run_cycles",
    "LimitCycleReport",
    "limit_cycle_thermo",
    "find_limit_cycle",
    "classify_regime",
    "OttoCheck",
    "otto_check",
    # two-qubit closed forms
    "AnalyticParams",
    "ObservableVector",
    "AffineMapPair",
    "derive_params",
    "from_engine_spec",
    "observables_from_state",
    "heat_map",
    "work_map",
    "build_affine_maps",
    "trajectory",
    "steady_state",
    "steady_state_thermo",
    "relaxation_rate",
    "work_closed_form",
    # sweeps and verification
    "SweepAxis",
    "SweepPlan",
    "SweepResult",
    "plan_from_config",
    "run_sweep",
    "verify",
]
