"""Bandit linear control: disturbance-action policies driven by a
memory-aware bandit convex optimization loop, plus an experiment harness."""

from .errors import (
    AuditError,
    ConfigError,
    DegenerateScheduleError,
    FeedbackContractError,
    InputError,
    ParameterError,
    StabilizationError,
    UnsupportedSystemError,
)
from .numerics import (
    BlockMatrix,
    project_spectral_ball,
    project_spectral_ball_stack,
    sample_unit_ball,
    sample_unit_sphere,
    spectral_norm,
)
from .plant import (
    LinearPlant,
    NoiseProcess,
    Trajectory,
    generate_noise,
    rollout_fixed_K,
    sample_noise,
    step,
    write_noise_csv,
)
from .costs import (
    BanditFeedback,
    CostConstants,
    CostOracle,
    NonsmoothCost,
    QuadraticCost,
    SmoothConvexCost,
    bandit_observe,
    make_cost,
    make_targets,
)
from .stability import (
    StabilityCertificate,
    certify,
    closed_loop,
    synthesize_K0,
)
from .dap import (
    ControlConstants,
    block_radii,
    compute_constants,
    dap_action,
    expected_surrogate,
    horizon_and_radius,
    ideal_state_action,
    in_class,
    project_M,
    psi,
    psi_stack,
    surrogate_cost,
)
from .bco_base import (
    MODES,
    REGIMES,
    BcoState,
    Schedule,
    base_round,
    init_state,
    make_schedule,
    omd_step,
    one_point_gradient,
)
from .bco_memory import (
    ReductionTrace,
    UpdateSchedule,
    drift_budget,
    drift_sums,
    effective_memory,
    policy_regret,
    run_reduction,
    schedule_stats,
    stationary_fire_rate,
)
from .controller import (
    ControlRun,
    RegretTrace,
    run_bandit_control,
)

__all__ = [
    "AuditError",
    "BanditFeedback",
    "BcoState",
    "BlockMatrix",
    "ConfigError",
    "ControlConstants",
    "ControlRun",
    "CostConstants",
    "CostOracle",
    "DegenerateScheduleError",
    "FeedbackContractError",
    "InputError",
    "LinearPlant",
    "MODES",
    "NoiseProcess",
    "NonsmoothCost",
    "ParameterError",
    "QuadraticCost",
    "REGIMES",
    "ReductionTrace",
    "RegretTrace",
    "Schedule",
    "SmoothConvexCost",
    "StabilityCertificate",
    "StabilizationError",
    "Trajectory",
    "UnsupportedSystemError",
    "UpdateSchedule",
    "bandit_observe",
    "base_round",
    "block_radii",
    "certify",
    "closed_loop",
    "compute_constants",
    "dap_action",
    "drift_budget",
    "drift_sums",
    "effective_memory",
    "expected_surrogate",
    "generate_noise",
    "horizon_and_radius",
    "ideal_state_action",
    "in_class",
    "init_state",
    "make_cost",
    "make_schedule",
    "make_targets",
    "omd_step",
    "one_point_gradient",
    "policy_regret",
    "project_M",
    "project_spectral_ball",
    "project_spectral_ball_stack",
    "psi",
    "psi_stack",
    "rollout_fixed_K",
    "run_bandit_control",
    "run_reduction",
    "sample_noise",
    "sample_unit_ball",
    "sample_unit_sphere",
    "schedule_stats",
    "spectral_norm",
    "stationary_fire_rate",
    "step",
    "surrogate_cost",
    "synthesize_K0",
    "write_noise_csv",
]

__version__ = "0.1.0"
