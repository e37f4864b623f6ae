"""Model parameters and closed-form threshold quantities.

Channel ``i`` (1..4) drives jumps of S_h, I_h, Q_h and R_h respectively.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

from scipy import integrate

from .errors import DomainError
from .hawkes import HawkesChannel, MarkDistribution

COMPARTMENTS = ("S_h", "I_h", "Q_h", "R_h", "S_r", "I_r")

RATE_FIELDS = (
    "theta_h", "theta_r", "mu_h", "mu_r", "delta_h", "delta_r",
    "zeta", "gamma_h", "p", "theta_q", "eta1", "eta2", "eta3",
)


def baseline_channels(marks: Optional[MarkDistribution] = None) -> tuple:
    marks = marks or MarkDistribution(1.0, 3.0)
    return (
        HawkesChannel(2e-4, 0.20, 1.0, marks),
        HawkesChannel(2e-4, 0.20, 1.0, marks),
        HawkesChannel(2e-4, 0.15, 1.0, marks),
        HawkesChannel(2e-4, 0.15, 1.0, marks),
    )


@dataclass(frozen=True)
class ModelParams:
    """Rates are per day; volatilities per sqrt(day).

    ``theta_q`` is the treatment effectiveness in quarantine. When
    ``truncated_mark_mean`` is set the threshold formulas use the mean of
    the capped mark law instead of the configured exponential mean.
    """

    theta_h: float = 7.95e-5
    theta_r: float = 5.48e-4
    mu_h: float = 4.11e-3
    mu_r: float = 5.48e-6
    delta_h: float = 5.48e-4
    delta_r: float = 1.37e-3
    zeta: float = 5.48e-3
    gamma_h: float = 2.27e-3
    p: float = 0.30
    theta_q: float = 0.8
    eta1: float = 6.85e-7
    eta2: float = 1.64e-7
    eta3: float = 7.4e-5
    sigma: tuple = (0.3, 0.3, 0.3, 0.3, 0.3, 0.3, 0.05, 0.05)
    channels: tuple = field(default_factory=baseline_channels)
    truncated_mark_mean: bool = False

    def __post_init__(self):
        for name in RATE_FIELDS:
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise DomainError(f"{name} must be a finite rate >= 0, got {value}")
        for name in ("mu_h", "mu_r", "eta3"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be > 0")
        for name in ("p", "theta_q"):
            if getattr(self, name) > 1:
                raise DomainError(f"{name} must lie in [0, 1], got {getattr(self, name)}")
        sigma = tuple(float(s) for s in self.sigma)
        if len(sigma) != 8 or any(not (math.isfinite(s) and s >= 0) for s in sigma):
            raise DomainError("sigma must be eight finite values >= 0")
        object.__setattr__(self, "sigma", sigma)
        channels = tuple(self.channels)
        if len(channels) != 4 or not all(isinstance(c, HawkesChannel) for c in channels):
            raise DomainError("channels must be four HawkesChannel instances")
        object.__setattr__(self, "channels", channels)

    def channel(self, i: int) -> HawkesChannel:
        """Channel by its 1-based index."""
        if i not in (1, 2, 3, 4):
            raise DomainError(f"unknown channel {i}")
        return self.channels[i - 1]

    def mark_mean(self, i: int) -> float:
        marks = self.channel(i).marks
        return marks.mean_truncated() if self.truncated_mark_mean else marks.mean

    def with_channel(self, i: int, **changes) -> "ModelParams":
        channels = list(self.channels)
        channels[i - 1] = replace(channels[i - 1], **changes)
        return replace(self, channels=tuple(channels))

    def without_jumps(self, which=(1, 2, 3, 4)) -> "ModelParams":
        out = self
        for i in which:
            out = out.with_channel(i, lambda0=0.0)
        return out


@dataclass(frozen=True)
class StructuralBounds:
    M: float = 1e5
    K_star: float = 0.002
    N_r_floor: float = 1e3
    N_h_floor: float = 1e4

    def __post_init__(self):
        for name in ("M", "K_star", "N_r_floor", "N_h_floor"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be a finite value > 0, got {value}")
        if self.N_h_floor > self.M:
            raise DomainError("N_h_floor must not exceed M")


class R0Terms(NamedTuple):
    contact: float      # (1-p)(eta1 + eta2)
    rodent: float       # eta3
    jump_infected: float     # channel 2 stationary rate times mean mark
    jump_quarantined: float  # channel 3
    denominator: float  # min(mu_h, mu_r) + min(delta_h, delta_r)

    @property
    def r0(self) -> float:
        return (self.contact + self.rodent + self.jump_infected + self.jump_quarantined) / self.denominator


def r0_terms(params: ModelParams) -> R0Terms:
    denom = min(params.mu_h, params.mu_r) + min(params.delta_h, params.delta_r)
    if not denom > 0:
        raise DomainError("min(mu_h, mu_r) + min(delta_h, delta_r) must be > 0")
    jumps = []
    for i in (2, 3):
        ch = params.channel(i)
        if ch.branching_ratio >= 1:
            raise DomainError(f"channel {i} is supercritical")
        jumps.append(ch.lambda0 * params.mark_mean(i) / (1.0 - ch.branching_ratio))
    return R0Terms(
        contact=(1.0 - params.p) * (params.eta1 + params.eta2),
        rodent=params.eta3,
        jump_infected=jumps[0],
        jump_quarantined=jumps[1],
        denominator=denom,
    )


def compute_r0(params: ModelParams) -> float:
    return r0_terms(params).r0


def extinction_exponent(params: ModelParams) -> float:
    """Upper bound on the long-run log growth rate of I_h + Q_h + I_r."""
    terms = r0_terms(params)
    return terms.denominator * (terms.r0 - 1.0)


def rodent_persistence(params: ModelParams, bounds: StructuralBounds):
    """Return ``(a, bound)``; ``bound`` is None unless ``a > 0``."""
    a = params.eta3 - params.mu_r - params.delta_r - 0.5 * params.sigma[7] ** 2
    bound = bounds.N_r_floor / params.eta3 * a if a > 0 else None
    return a, bound


def log_mark_mean(marks: MarkDistribution) -> float:
    """E[ln(1 + min(X, cap))] for X ~ Exp(mean), by adaptive quadrature."""
    m, c = marks.mean, marks.cap
    body, _ = integrate.quad(
        lambda x: math.log1p(x) * math.exp(-x / m) / m, 0.0, c, epsrel=1e-10, epsabs=0.0, limit=200
    )
    return body + math.log1p(c) * math.exp(-c / m)


class HumanPersistence(NamedTuple):
    eps_h: float
    lambda_h: float
    lambda0_h: float
    bound: Optional[float]
    log_mark_mean: float


def human_persistence(params: ModelParams, bounds: StructuralBounds) -> HumanPersistence:
    p, mu = params.p, params.mu_h
    s = params.sigma
    eps_h = params.theta_h / (bounds.M * (mu + (1 - p) * (params.eta2 + params.eta1 * bounds.K_star)))
    stationary = {}
    for i in (2, 3, 4):
        ch = params.channel(i)
        if ch.branching_ratio >= 1:
            raise DomainError(f"channel {i} is supercritical")
        stationary[i] = ch.stationary_intensity
    jump_load = sum(params.mark_mean(i) * stationary[i] for i in (2, 3, 4))
    L2 = log_mark_mean(params.channel(2).marks)
    bracket = (eps_h ** 2 * mu + (eps_h ** 3 - 1) * s[2] ** 2) / mu - jump_load / mu
    lambda_h = (
        (1 - p) * params.eta2 * bracket
        - (mu + params.delta_h + params.zeta + 0.5 * (s[3] ** 2 + (1 - p) ** 2 * s[1] ** 2))
        + L2 * stationary[2]
    )
    lambda0_h = (1 - p) * params.eta2 * (params.eta1 + params.eta2) / (mu * bounds.N_h_floor)
    bound = lambda_h / lambda0_h if lambda_h > 0 and lambda0_h > 0 else None
    return HumanPersistence(eps_h, lambda_h, lambda0_h, bound, L2)


@dataclass(frozen=True)
class ThresholdReport:
    r0: float
    extinction_exponent: float
    rodent_a: float
    rodent_bound: Optional[float]
    eps_h: float
    lambda_h: float
    lambda0_h: float
    human_bound: Optional[float]
    extinction_predicted: bool
    rodent_persistent: bool
    human_persistent: bool
    indeterminate: bool

    @property
    def classification(self) -> tuple:
        flags = ("extinction_predicted", "rodent_persistent", "human_persistent", "indeterminate")
        return tuple(f for f in flags if getattr(self, f))


def threshold_report(params: ModelParams, bounds: StructuralBounds) -> ThresholdReport:
    r0 = compute_r0(params)
    a, rodent_bound = rodent_persistence(params, bounds)
    human = human_persistence(params, bounds)
    extinct = r0 < 1
    rodent_ok = rodent_bound is not None
    human_ok = human.bound is not None
    return ThresholdReport(
        r0=r0,
        extinction_exponent=extinction_exponent(params),
        rodent_a=a,
        rodent_bound=rodent_bound,
        eps_h=human.eps_h,
        lambda_h=human.lambda_h,
        lambda0_h=human.lambda0_h,
        human_bound=human.bound,
        extinction_predicted=extinct,
        rodent_persistent=rodent_ok,
        human_persistent=human_ok,
        indeterminate=not (extinct or rodent_ok or human_ok),
    )
