"""Joint transmit beamforming and dual-surface phase optimization."""

from .baselines import BaselineKind, baseline_phases, run_baseline
from .beamformer import (
    WmmseState,
    beamforming_stage,
    mse,
    solve_power_dual,
    update_beamformers,
    update_decoder,
    update_weight,
)
from .bench import Campaign, ResultRow, desk_config, figure_campaign, paper_config, run_campaign
from .errors import (
    ConvergenceError,
    DimensionError,
    InfeasibleError,
    NumericalError,
    ShapeError,
)
from .model import (
    BeamPair,
    ChannelSet,
    PhasePair,
    SystemConfig,
    draw_channels,
    ee_objective,
    effective_channels,
    load_config,
    power_from_db,
    sinr_and_rate,
    static_power,
    total_power,
)
from .optimizer import AlternatingConfig, IterationTrace, default_init, optimize
from .phaseopt import (
    PhaseQuadratics,
    build_quadratics,
    mm_linearize,
    multiplier_bisection,
    phase_closed_form,
    phase_stage,
    sca_threshold,
)

__version__ = "0.1.0"

__all__ = [
    "AlternatingConfig",
    "BaselineKind",
    "BeamPair",
    "Campaign",
    "ChannelSet",
    "ConvergenceError",
    "DimensionError",
    "InfeasibleError",
    "IterationTrace",
    "NumericalError",
    "PhasePair",
    "PhaseQuadratics",
    "ResultRow",
    "ShapeError",
    "SystemConfig",
    "WmmseState",
    "baseline_phases",
    "beamforming_stage",
    "build_quadratics",
    "default_init",
    "desk_config",
    "draw_channels",
    "ee_objective",
    "effective_channels",
    "figure_campaign",
    "load_config",
    "mm_linearize",
    "mse",
    "multiplier_bisection",
    "optimize",
    "paper_config",
    "phase_closed_form",
    "phase_stage",
    "power_from_db",
    "run_baseline",
    "run_campaign",
    "sca_threshold",
    "sinr_and_rate",
    "solve_power_dual",
    "static_power",
    "total_power",
    "update_beamformers",
    "update_decoder",
    "update_weight",
]
