"""Jump-adapted Euler-Maruyama integration of the human-rodent system.

Each path pre-samples its four Hawkes event logs, integrates on the union
of the regular ``dt`` grid and all event times, and applies multiplicative
jumps right after the continuous update that lands on an event time.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from .errors import DomainError, SimulationError
from .hawkes import EventLog, simulate_events
from .model import COMPARTMENTS, ModelParams
from .streams import BROWNIAN, derive_stream

log = logging.getLogger(__name__)


class State(NamedTuple):
    s_h: float
    i_h: float
    q_h: float
    r_h: float
    s_r: float
    i_r: float

    @property
    def n_h(self) -> float:
        return self.s_h + self.i_h + self.q_h + self.r_h

    @property
    def n_r(self) -> float:
        return self.s_r + self.i_r


DEFAULT_INITIAL = State(9990.0, 10.0, 0.0, 0.0, 4990.0, 10.0)


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.1
    horizon: float = 500.0
    n_paths: int = 80
    master_seed: int = 42
    initial_state: State = DEFAULT_INITIAL
    positivity_floor: float = 1e-9

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise DomainError(f"dt must be > 0, got {self.dt}")
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise DomainError(f"horizon must be > 0, got {self.horizon}")
        if self.dt > self.horizon:
            raise DomainError("dt must not exceed horizon")
        if self.n_paths < 1:
            raise DomainError("n_paths must be >= 1")
        if not 0 <= self.master_seed < 2 ** 64:
            raise DomainError("master_seed must be a 64-bit unsigned integer")
        if not self.positivity_floor > 0:
            raise DomainError("positivity_floor must be > 0")
        state = State(*(float(v) for v in self.initial_state))
        if any(not (math.isfinite(v) and v >= 0) for v in state):
            raise DomainError("initial compartments must be finite and >= 0")
        if state.n_h <= 0 or state.n_r <= 0:
            raise DomainError("initial human and rodent totals must be > 0")
        object.__setattr__(self, "initial_state", state)

    def regular_grid(self) -> np.ndarray:
        n = int(math.floor(self.horizon / self.dt + 1e-9))
        grid = np.arange(n + 1) * self.dt
        if self.horizon - grid[-1] > 1e-9 * self.dt:
            grid = np.append(grid, self.horizon)
        else:
            grid[-1] = self.horizon
        return grid


@dataclass
class PathRecord:
    path_index: int
    grid: np.ndarray
    states: np.ndarray           # shape (len(grid), 6), columns in COMPARTMENTS order
    events: tuple                # four EventLogs, channels 1..4
    clamp_count: int = 0

    @property
    def n_steps(self) -> int:
        return self.grid.size - 1

    def series(self, name: str) -> np.ndarray:
        return self.states[:, COMPARTMENTS.index(name)]

    def on_grid(self, regular: np.ndarray) -> np.ndarray:
        """States sampled left-constant on ``regular`` times."""
        idx = np.searchsorted(self.grid, regular, side="right") - 1
        return self.states[np.clip(idx, 0, None)]


def drift(state: Sequence[float], params: ModelParams) -> tuple:
    """Drift of the six compartments, heads per day."""
    s_h, i_h, q_h, r_h, s_r, i_r = state
    n_h = s_h + i_h + q_h + r_h
    n_r = s_r + i_r
    if n_h <= 0 or n_r <= 0:
        raise DomainError("human and rodent totals must be > 0")
    mu_h = params.mu_h
    incidence = (1.0 - params.p) * (params.eta1 * i_r + params.eta2 * i_h) / n_h * s_h
    rodent_inc = params.eta3 * s_r * i_r / n_r
    return (
        params.theta_h - incidence - mu_h * s_h,
        incidence - (mu_h + params.delta_h + params.zeta) * i_h,
        params.zeta * i_h - (mu_h + params.gamma_h + (1.0 - params.theta_q) * params.delta_h) * q_h,
        params.gamma_h * q_h - mu_h * r_h,
        params.theta_r - rodent_inc - params.mu_r * s_r,
        rodent_inc - (params.mu_r + params.delta_r) * i_r,
    )


def diffusion(state: Sequence[float], params: ModelParams, dW: Sequence[float]) -> tuple:
    """Brownian contribution per compartment for increments ``dW`` of B_1..B_8.

    B_2 enters S_h and I_h with opposite signs through the same draw.
    """
    s_h, i_h, q_h, r_h, s_r, i_r = state
    n_h = s_h + i_h + q_h + r_h
    if n_h <= 0 or s_r + i_r <= 0:
        raise DomainError("human and rodent totals must be > 0")
    s1, s2, s3, s4, s5, s6, s7, s8 = params.sigma
    w1, w2, w3, w4, w5, w6, w7, w8 = dW
    q = 1.0 - params.p
    return (
        -q * (s1 * i_r * w1 + s2 * i_h * w2) / n_h * s_h + s3 * s_h * w3,
        q * s2 * s_h / n_h * i_h * w2 + s4 * i_h * w4,
        s5 * q_h * w5,
        s6 * r_h * w6,
        s7 * s_r * w7,
        s8 * i_r * w8,
    )


def apply_jumps(state: Sequence[float], channel_index: int, marks) -> State:
    """Multiply the compartment driven by ``channel_index`` by prod(1 + mark)."""
    if channel_index not in (1, 2, 3, 4):
        raise DomainError(f"unknown channel {channel_index}")
    values = list(state)
    factor = 1.0
    for m in marks:
        if not m > 0:
            raise DomainError(f"jump marks must be > 0, got {m}")
        factor *= 1.0 + m
    values[channel_index - 1] *= factor
    return State(*values)


def _jump_schedule(events: Sequence[EventLog]) -> dict:
    schedule: dict = {}
    for log_ in events:
        for t, m in zip(log_.times.tolist(), log_.marks.tolist()):
            schedule.setdefault(t, []).append((log_.channel, m))
    return schedule


def simulate_path(params: ModelParams, config: SimConfig, path_index: int = 0) -> PathRecord:
    """One trajectory, fully determined by ``(config.master_seed, path_index)``."""
    events = tuple(
        simulate_events(
            params.channel(i), config.horizon, derive_stream(config.master_seed, path_index, i), index=i
        )
        for i in (1, 2, 3, 4)
    )
    schedule = _jump_schedule(events)
    grid = config.regular_grid()
    if schedule:
        grid = np.union1d(grid, np.fromiter(schedule, dtype=float))
    steps = np.diff(grid)
    noise = derive_stream(config.master_seed, path_index, BROWNIAN).standard_normal(size=(steps.size, 8))
    noise *= np.sqrt(steps)[:, None]

    floor = config.positivity_floor
    states = np.empty((grid.size, 6))
    x = tuple(config.initial_state)
    states[0] = x
    clamps = 0
    grid_list = grid.tolist()
    for k, h in enumerate(steps.tolist()):
        f = drift(x, params)
        g = diffusion(x, params, noise[k].tolist())
        new = [xi + fi * h + gi for xi, fi, gi in zip(x, f, g)]
        for j, v in enumerate(new):
            if not math.isfinite(v):
                raise SimulationError(
                    f"non-finite {COMPARTMENTS[j]} at t={grid_list[k + 1]:g} on path {path_index}",
                    time=grid_list[k + 1],
                    component=COMPARTMENTS[j],
                )
            if v < 0.0:
                new[j] = floor
                clamps += 1
        t_next = grid_list[k + 1]
        jumps = schedule.get(t_next)
        if jumps:
            for channel, mark in jumps:
                new[channel - 1] *= 1.0 + mark
        x = tuple(new)
        states[k + 1] = x
    return PathRecord(path_index, grid, states, events, clamps)


@dataclass
class EnsembleResult:
    paths: List[PathRecord]
    grid: np.ndarray             # regular dt grid
    mean_states: np.ndarray      # (len(grid), 6), mean over successful paths
    failures: List[tuple] = field(default_factory=list)   # (path_index, message)

    @property
    def clamp_count(self) -> int:
        return sum(p.clamp_count for p in self.paths)

    @property
    def step_count(self) -> int:
        return sum(p.n_steps for p in self.paths)


def _run_one(args):
    params, config, index = args
    try:
        return simulate_path(params, config, index)
    except SimulationError as exc:
        return (index, str(exc))


def simulate_ensemble(params: ModelParams, config: SimConfig, workers: Optional[int] = None) -> EnsembleResult:
    """All ``config.n_paths`` paths, ordered by path index.

    ``workers > 1`` runs paths in a process pool; output is identical to the
    sequential run because every path derives its own streams.
    """
    jobs = [(params, config, i) for i in range(config.n_paths)]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_run_one(job) for job in jobs]

    paths = [r for r in results if isinstance(r, PathRecord)]
    failures = [r for r in results if not isinstance(r, PathRecord)]
    for index, message in failures:
        log.warning("path %d failed: %s", index, message)

    grid = config.regular_grid()
    if paths:
        total = np.zeros((grid.size, 6))
        for rec in paths:
            total += rec.on_grid(grid)
        mean = total / len(paths)
    else:
        mean = np.full((grid.size, 6), np.nan)
    return EnsembleResult(paths, grid, mean, failures)
