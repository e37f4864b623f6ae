"""Linear Hawkes processes with an exponential kernel.

The conditional intensity is

    lambda(t) = lambda0 + alpha * sum_{T_i < t} exp(-beta (t - T_i))

and everything here (simulation, intensity, compensator, moments) is exact
for that kernel. Event times use the left-limit convention: an event at
exactly ``t`` does not contribute to ``lambda(t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, MomentFormulaError


@dataclass(frozen=True)
class MarkDistribution:
    """Exponential jump size with the given mean, clamped at ``cap``."""

    mean: float = 1.0
    cap: float = 3.0

    def __post_init__(self):
        if not (self.mean > 0 and math.isfinite(self.mean)):
            raise DomainError(f"mark mean must be positive, got {self.mean}")
        if not (self.cap > 0 and math.isfinite(self.cap)):
            raise DomainError(f"mark cap must be positive, got {self.cap}")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raw = rng.exponential(self.mean, size=size)
        # zero has probability zero, but a float draw can still round to it
        raw[raw <= 0.0] = np.nextafter(0.0, 1.0)
        return np.minimum(raw, self.cap)

    def mean_truncated(self) -> float:
        """E[min(X, cap)] for X ~ Exp(mean)."""
        return self.mean * -math.expm1(-self.cap / self.mean)


@dataclass(frozen=True)
class HawkesChannel:
    """One self-exciting jump channel.

    ``lambda0 == 0`` is accepted and means the channel never fires; it is
    how jumps are switched off in the model.
    """

    lambda0: float
    alpha: float
    beta: float
    marks: MarkDistribution = field(default_factory=MarkDistribution)

    def __post_init__(self):
        for name in ("lambda0", "alpha", "beta"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value}")
        if self.lambda0 < 0:
            raise DomainError(f"lambda0 must be >= 0, got {self.lambda0}")
        if self.alpha < 0:
            raise DomainError(f"alpha must be >= 0, got {self.alpha}")
        if self.beta <= 0:
            raise DomainError(f"beta must be > 0, got {self.beta}")
        if self.alpha >= self.beta:
            raise DomainError(
                f"branching ratio alpha/beta = {self.alpha / self.beta:g} must be < 1 (subcriticality)"
            )

    @property
    def branching_ratio(self) -> float:
        return self.alpha / self.beta

    @property
    def stationary_intensity(self) -> float:
        return self.lambda0 / (1.0 - self.branching_ratio)


@dataclass(frozen=True)
class EventLog:
    times: np.ndarray
    marks: np.ndarray
    channel: int
    cap: float = math.inf

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        marks = np.asarray(self.marks, dtype=float)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "marks", marks)
        if times.ndim != 1 or times.shape != marks.shape:
            raise DomainError("times and marks must be 1-d arrays of equal length")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise DomainError("event times must be strictly increasing")
        if times.size and times[0] < 0:
            raise DomainError("event times must be non-negative")
        if marks.size and not (np.all(marks > 0) and np.all(marks <= self.cap)):
            raise DomainError("marks must lie in (0, cap]")

    def __len__(self):
        return self.times.size

    @classmethod
    def empty(cls, channel: int = 1) -> "EventLog":
        return cls(np.empty(0), np.empty(0), channel)


def _check_time(t):
    if not t >= 0:
        raise DomainError(f"time must be >= 0, got {t}")


def intensity_at(channel: HawkesChannel, events: EventLog, t: float) -> float:
    """lambda(t) with only events strictly before ``t`` counted."""
    _check_time(t)
    past = events.times[events.times < t]
    if past.size == 0:
        return channel.lambda0
    return channel.lambda0 + channel.alpha * float(np.exp(-channel.beta * (t - past)).sum())


def intensity_path(channel: HawkesChannel, events: EventLog, times) -> np.ndarray:
    """lambda evaluated along a nondecreasing sequence of times.

    Uses the recursive decay of the excitation, O(1) per event and per
    evaluation point instead of re-summing the history.
    """
    times = np.asarray(times, dtype=float)
    if times.size and times[0] < 0:
        raise DomainError("times must be >= 0")
    if times.size > 1 and np.any(np.diff(times) < 0):
        raise DomainError("times must be nondecreasing")
    lam0, alpha, beta = channel.lambda0, channel.alpha, channel.beta
    ev = events.times
    out = np.empty(times.size)
    excitation = 0.0  # lambda - lambda0 at time `last`, right limit
    last = 0.0
    k = 0
    for j, t in enumerate(times):
        while k < ev.size and ev[k] < t:
            excitation = excitation * math.exp(-beta * (ev[k] - last)) + alpha
            last = ev[k]
            k += 1
        out[j] = lam0 + excitation * math.exp(-beta * (t - last))
    return out


def compensator(channel: HawkesChannel, events: EventLog, t: float) -> float:
    """Integrated intensity over [0, t], closed form for the exponential kernel."""
    _check_time(t)
    past = events.times[events.times < t]
    total = channel.lambda0 * t
    if past.size and channel.alpha > 0:
        total += channel.alpha / channel.beta * float(-np.expm1(-channel.beta * (t - past)).sum())
    return total


def compensator_at_events(channel: HawkesChannel, events: EventLog) -> np.ndarray:
    """Compensator evaluated at each event time, by recursion over the log."""
    lam0, alpha, beta = channel.lambda0, channel.alpha, channel.beta
    out = np.empty(len(events))
    total = 0.0
    excitation = 0.0
    last = 0.0
    for i, t in enumerate(events.times):
        gap = t - last
        total += lam0 * gap + excitation / beta * -math.expm1(-beta * gap)
        out[i] = total
        excitation = excitation * math.exp(-beta * gap) + alpha
        last = t
    return out


def simulate_events(
    channel: HawkesChannel,
    horizon: float,
    rng: np.random.Generator,
    index: int = 1,
) -> EventLog:
    """Exact sample of the channel on [0, horizon] by Ogata thinning.

    Between events the intensity only decays, so its value just after the
    current point dominates it until the next candidate.
    """
    if not horizon > 0:
        raise DomainError(f"horizon must be > 0, got {horizon}")
    lam0, alpha, beta = channel.lambda0, channel.alpha, channel.beta
    times = []
    t = 0.0
    excitation = 0.0
    while True:
        bound = lam0 + excitation
        if bound <= 0.0:
            break
        w = rng.exponential(1.0 / bound)
        t += w
        if t > horizon:
            break
        excitation *= math.exp(-beta * w)
        if rng.random() * bound <= lam0 + excitation:
            times.append(t)
            excitation += alpha
    marks = channel.marks.sample(rng, len(times))
    return EventLog(np.array(times, dtype=float), marks, index, channel.marks.cap)


def _check_moment_args(channel, t):
    _check_time(t)
    if channel.alpha == channel.beta:
        raise MomentFormulaError("closed-form moments are singular at alpha == beta")


def expected_intensity(channel: HawkesChannel, t: float) -> float:
    """E[lambda(t)] started from an empty history."""
    _check_moment_args(channel, t)
    lam0, a, b = channel.lambda0, channel.alpha, channel.beta
    # lambda0 / (1 - b/a) rewritten as lambda0 * a / (a - b) so that a = 0 is finite
    return lam0 / (1.0 - a / b) + lam0 * a / (a - b) * math.exp(-(b - a) * t)


def expected_count(channel: HawkesChannel, t: float) -> float:
    """E[H(t)], the mean number of events in [0, t]."""
    _check_moment_args(channel, t)
    lam0, a, b = channel.lambda0, channel.alpha, channel.beta
    return lam0 * t / (1.0 - a / b) + a * lam0 / (a - b) ** 2 * math.expm1(-(b - a) * t)
