"""Post-processing of simulated paths and threshold checks.

Asymptotic statements (liminf of time averages, limsup of log growth) are
approximated on a trailing window of the horizon, by default its last half.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np

from .errors import DomainError, ExtinctBeforeWindow
from .hawkes import (
    HawkesChannel,
    compensator,
    expected_count,
    expected_intensity,
    intensity_at,
    simulate_events,
)
from .model import ModelParams, StructuralBounds, compute_r0, human_persistence, rodent_persistence
from .streams import derive_stream


@dataclass(frozen=True)
class TimeSeries:
    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape:
            raise DomainError("grid and values must be 1-d of equal length")
        if grid.size > 1 and not np.all(np.diff(grid) > 0):
            raise DomainError("grid must be strictly increasing")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)


def _window_start(grid, window):
    if not 0 < window <= 1:
        raise DomainError(f"window fraction must lie in (0, 1], got {window}")
    return grid[-1] - window * (grid[-1] - grid[0])


def time_average(ts: TimeSeries, t0: float) -> float:
    """Trapezoidal mean of the series over [t0, T]."""
    grid, values = ts.grid, ts.values
    if grid.size < 2 or not t0 < grid[-1]:
        raise DomainError("empty averaging window")
    t0 = max(t0, grid[0])
    k = np.searchsorted(grid, t0, side="right")
    g = np.concatenate(([t0], grid[k:]))
    v = np.concatenate(([np.interp(t0, grid, values)], values[k:]))
    return float(np.trapezoid(v, g) / (grid[-1] - t0))


def extinction_slope(ts: TimeSeries, window: float = 0.5, floor: float = 1e-9) -> float:
    """Least-squares slope of log(values) against time on the trailing window."""
    start = _window_start(ts.grid, window)
    mask = ts.grid >= start
    t, v = ts.grid[mask], ts.values[mask]
    if t.size < 2:
        raise DomainError("window holds fewer than two points")
    if np.all(v <= floor):
        raise ExtinctBeforeWindow("extinct before window: every value is at the positivity floor")
    y = np.log(np.maximum(v, floor))
    tc = t - t.mean()
    return float(np.dot(tc, y - y.mean()) / np.dot(tc, tc))


@dataclass
class BoundCheck:
    compartment: str
    applicable: bool
    bound: Optional[float]
    percentile5: Optional[float] = None
    n_included: int = 0
    n_excluded: int = 0
    passed: Optional[bool] = None
    note: str = ""


@dataclass
class PersistenceReport:
    rodent: BoundCheck
    human: BoundCheck
    averages_i_r: np.ndarray
    averages_i_h: np.ndarray
    warnings: List[str] = field(default_factory=list)
    note: str = "liminf approximated by the trailing-window time average"


def _bound_check(name, bound, averages, keep, tolerance):
    n_in = int(keep.sum())
    check = BoundCheck(name, bound is not None, bound, n_included=n_in, n_excluded=int(keep.size - n_in))
    if bound is None:
        check.note = f"{name} bound inapplicable: persistence condition does not hold"
        return check
    if n_in == 0:
        check.note = "every path violated the population floor"
        return check
    check.percentile5 = float(np.percentile(averages[keep], 5))
    check.passed = check.percentile5 >= (1.0 - tolerance) * bound
    return check


def persistence_check(
    records: Sequence,
    params: ModelParams,
    bounds: StructuralBounds,
    window: float = 0.5,
    tolerance: float = 0.1,
) -> PersistenceReport:
    """Compare trailing-window averages of I_r and I_h with the persistence bounds.

    Paths whose realized N_r (resp. N_h) drops below the structural floor
    fall outside the bound's hypothesis; they are excluded and counted.
    """
    avg_r, avg_h, ok_r, ok_h, drift = [], [], [], [], []
    for rec in records:
        start = _window_start(rec.grid, window)
        i_r = TimeSeries(rec.grid, rec.series("I_r"))
        i_h = TimeSeries(rec.grid, rec.series("I_h"))
        avg_r.append(time_average(i_r, start))
        avg_h.append(time_average(i_h, start))
        n_r = rec.series("S_r") + rec.series("I_r")
        n_h = rec.states[:, :4].sum(axis=1)
        ok_r.append(n_r.min() >= bounds.N_r_floor)
        ok_h.append(n_h[rec.grid >= start].min() >= bounds.N_h_floor)
        late = time_average(i_r, _window_start(rec.grid, window / 2))
        drift.append(abs(late - avg_r[-1]) / max(avg_r[-1], 1e-300))
    avg_r, avg_h = np.array(avg_r), np.array(avg_h)
    _, rodent_bound = rodent_persistence(params, bounds)
    human = human_persistence(params, bounds)
    warnings = []
    if drift and np.median(drift) > 0.1:
        warnings.append("trailing-window I_r averages have not stabilized; consider a longer horizon")
    return PersistenceReport(
        rodent=_bound_check("rodent", rodent_bound, avg_r, np.array(ok_r, dtype=bool), tolerance),
        human=_bound_check("human", human.bound, avg_h, np.array(ok_h, dtype=bool), tolerance),
        averages_i_r=avg_r,
        averages_i_h=avg_h,
        warnings=warnings,
    )


@dataclass
class LLNReport:
    limit: float
    mean: float
    stderr: float
    samples: np.ndarray

    @property
    def deviation(self) -> float:
        return abs(self.mean - self.limit)

    @property
    def relative_deviation(self) -> float:
        return self.deviation / self.limit if self.limit else math.inf

    @property
    def within_3se(self) -> bool:
        return self.deviation <= 3 * self.stderr


def hawkes_lln_check(channel: HawkesChannel, horizon: float, n_paths: int, seed: int = 0) -> LLNReport:
    """Empirical compensator rate Lambda(T)/T against lambda0 / (1 - alpha/beta)."""
    if channel.branching_ratio >= 1:
        raise DomainError("channel must be subcritical")
    rates = np.empty(n_paths)
    for k in range(n_paths):
        ev = simulate_events(channel, horizon, derive_stream(seed, k, 1))
        rates[k] = compensator(channel, ev, horizon) / horizon
    stderr = float(rates.std(ddof=1) / math.sqrt(n_paths)) if n_paths > 1 else math.nan
    return LLNReport(channel.stationary_intensity, float(rates.mean()), stderr, rates)


@dataclass
class MomentRow:
    quantity: str      # "intensity" or "count"
    t: float
    expected: float
    mean: float
    stderr: float

    @property
    def z(self) -> float:
        if self.stderr == 0:
            return 0.0 if self.mean == self.expected else math.inf
        return (self.mean - self.expected) / self.stderr


def hawkes_moment_check(
    channel: HawkesChannel,
    intensity_times=(1.0, 5.0, 20.0),
    count_times=(10.0, 50.0),
    n_paths: int = 5000,
    seed: int = 0,
) -> List[MomentRow]:
    """Monte Carlo means of lambda(t) and H(t) against their closed forms."""
    horizon = max(list(intensity_times) + list(count_times))
    lam = np.empty((n_paths, len(intensity_times)))
    cnt = np.empty((n_paths, len(count_times)))
    for k in range(n_paths):
        ev = simulate_events(channel, horizon, derive_stream(seed, k, 1))
        lam[k] = [intensity_at(channel, ev, t) for t in intensity_times]
        cnt[k] = np.searchsorted(ev.times, count_times, side="right")
    rows = []
    for j, t in enumerate(intensity_times):
        rows.append(MomentRow("intensity", t, expected_intensity(channel, t), lam[:, j].mean(),
                              lam[:, j].std(ddof=1) / math.sqrt(n_paths)))
    for j, t in enumerate(count_times):
        rows.append(MomentRow("count", t, expected_count(channel, t), cnt[:, j].mean(),
                              cnt[:, j].std(ddof=1) / math.sqrt(n_paths)))
    return rows


# --- R0 grid scans -----------------------------------------------------------

SCAN_AXES = (
    "mu_h", "mu_r", "delta_h", "delta_r", "eta1_plus_eta2", "p", "lambda0_joint", "alpha2", "alpha3",
)


def set_axis(params: ModelParams, name: str, value: float) -> ModelParams:
    """Copy of ``params`` with one scan axis set to ``value``."""
    value = float(value)
    if name in ("mu_h", "mu_r", "delta_h", "delta_r", "p"):
        return replace(params, **{name: value})
    if name == "eta1_plus_eta2":
        total = params.eta1 + params.eta2
        share = params.eta1 / total if total > 0 else 0.5
        return replace(params, eta1=value * share, eta2=value * (1.0 - share))
    if name == "lambda0_joint":
        return params.with_channel(2, lambda0=value).with_channel(3, lambda0=value)
    if name in ("alpha2", "alpha3"):
        return params.with_channel(int(name[-1]), alpha=value)
    raise DomainError(f"unknown scan axis {name!r}; expected one of {', '.join(SCAN_AXES)}")


@dataclass
class GridScan:
    x_name: str
    x_values: np.ndarray
    y_name: str
    y_values: np.ndarray
    z: np.ndarray                     # shape (len(y_values), len(x_values))
    threshold_contour: List[tuple]    # (x, y) points where z crosses the level


def threshold_contour(x, y, z, level=1.0) -> List[tuple]:
    """Level crossings on grid edges by linear interpolation."""
    points = []
    seen = set()

    def add(px, py):
        key = (float(px), float(py))
        if key not in seen:
            seen.add(key)
            points.append(key)

    ny, nx = z.shape
    for j in range(ny):
        for i in range(nx):
            if z[j, i] == level:
                add(x[i], y[j])
            for dj, di in ((0, 1), (1, 0)):
                jj, ii = j + dj, i + di
                if jj >= ny or ii >= nx:
                    continue
                a, b = z[j, i] - level, z[jj, ii] - level
                if a * b < 0:
                    frac = a / (a - b)
                    add(x[i] + frac * (x[ii] - x[i]), y[j] + frac * (y[jj] - y[j]))
    return points


def _axis_values(spec, resolution):
    name, lo, hi = spec
    if resolution < 2:
        raise DomainError("resolution must be >= 2 per axis")
    return name, np.linspace(float(lo), float(hi), resolution)


def scan_r0(
    params: ModelParams,
    bounds: Optional[StructuralBounds],
    x_spec: tuple,
    y_spec: tuple,
    resolution=50,
) -> GridScan:
    """R0 over a rectangle of two parameters; specs are ``(name, low, high)``.

    ``bounds`` is accepted for signature symmetry with the other threshold
    tools; R0 does not depend on it.
    """
    rx, ry = (resolution, resolution) if np.isscalar(resolution) else resolution
    x_name, xs = _axis_values(x_spec, int(rx))
    y_name, ys = _axis_values(y_spec, int(ry))
    for name in (x_name, y_name):
        if name not in SCAN_AXES:
            raise DomainError(f"unknown scan axis {name!r}; expected one of {', '.join(SCAN_AXES)}")
    if x_name == y_name:
        raise DomainError("scan axes must be distinct")
    z = np.empty((ys.size, xs.size))
    for j, yv in enumerate(ys):
        row_params = set_axis(params, y_name, yv)
        for i, xv in enumerate(xs):
            z[j, i] = compute_r0(set_axis(row_params, x_name, xv))
    return GridScan(x_name, xs, y_name, ys, z, threshold_contour(xs, ys, z))
