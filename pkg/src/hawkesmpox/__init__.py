"""Hawkes-driven stochastic human-rodent Mpox model: simulation and thresholds."""

__version__ = "0.1.0"

from .errors import ConfigError, DomainError, ExtinctBeforeWindow, MomentFormulaError, SimulationError
from .hawkes import (
    EventLog,
    HawkesChannel,
    MarkDistribution,
    compensator,
    expected_count,
    expected_intensity,
    intensity_at,
    simulate_events,
)
from .model import (
    ModelParams,
    StructuralBounds,
    ThresholdReport,
    compute_r0,
    extinction_exponent,
    human_persistence,
    rodent_persistence,
    threshold_report,
)
from .simulator import PathRecord, SimConfig, State, simulate_ensemble, simulate_path
