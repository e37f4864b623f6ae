"""Run configuration: flat sectioned key-value files (INI style).

Every key is optional; missing keys take the baseline value and are
recorded in ``RunConfig.provenance`` as ``"default"``. Unknown sections or
keys are rejected.
"""

from __future__ import annotations

import configparser
import logging
import math
import re
from dataclasses import dataclass, field, replace

from .errors import ConfigError, DomainError
from .hawkes import HawkesChannel, MarkDistribution
from .model import RATE_FIELDS, ModelParams, StructuralBounds
from .simulator import SimConfig, State

log = logging.getLogger(__name__)

BOUND_KEYS = ("M", "K_star", "N_r_floor", "N_h_floor")
STATE_KEYS = State._fields
SIM_KEYS = ("dt", "horizon", "n_paths", "master_seed", "positivity_floor") + STATE_KEYS

SCHEMA = {
    "model": RATE_FIELDS + tuple(f"sigma{i}" for i in range(1, 9)) + ("truncated_mark_mean",),
    "bounds": BOUND_KEYS,
    "hawkes": tuple(f"{k}{i}" for k in ("lambda0_", "alpha", "beta") for i in range(1, 5))
    + ("mark_mean", "mark_cap")
    + tuple(f"{k}_{i}" for k in ("mark_mean", "mark_cap") for i in range(1, 5)),
    "simulation": SIM_KEYS,
    "output": ("directory",),
}
# written by the CLI next to every run; accepted and ignored on input
MANIFEST_SECTION = "manifest"


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams = field(default_factory=ModelParams)
    bounds: StructuralBounds = field(default_factory=StructuralBounds)
    sim: SimConfig = field(default_factory=SimConfig)
    output_dir: str = "out"
    provenance: dict = field(default_factory=dict, compare=False)

    def defaulted(self, section=None):
        return sorted(k for k, v in self.provenance.items()
                      if v == "default" and (section is None or k.startswith(section + ".")))


def _line_index(text):
    """Map ``section.key`` to its 1-based line number."""
    where = {}
    section = None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            where.setdefault(section, n)
            continue
        m = re.match(r"([^=:\s]+)\s*[=:]", line)
        if m and section is not None:
            where.setdefault(f"{section}.{m.group(1)}", n)
    return where


class _Reader:
    def __init__(self, parser, lines):
        self.parser = parser
        self.lines = lines
        self.provenance = {}

    def raw(self, section, key):
        path = f"{section}.{key}"
        if self.parser.has_option(section, key):
            self.provenance[path] = "config"
            return self.parser.get(section, key)
        self.provenance[path] = "default"
        return None

    def error(self, section, key, message):
        path = f"{section}.{key}" if key else section
        return ConfigError(message, key=path, line=self.lines.get(path))

    def number(self, section, key, default):
        value = self.raw(section, key)
        if value is None:
            return default
        try:
            out = float(value)
        except ValueError:
            raise self.error(section, key, f"expected a number, got {value!r}") from None
        if not math.isfinite(out):
            raise self.error(section, key, f"expected a finite number, got {value!r}")
        return out

    def integer(self, section, key, default):
        value = self.raw(section, key)
        if value is None:
            return default
        try:
            return int(value)
        except ValueError:
            pass
        try:
            as_float = float(value)
        except ValueError:
            raise self.error(section, key, f"expected an integer, got {value!r}") from None
        if not as_float.is_integer():
            raise self.error(section, key, f"expected an integer, got {value!r}")
        return int(as_float)

    def boolean(self, section, key, default):
        value = self.raw(section, key)
        if value is None:
            return default
        try:
            return self.parser.getboolean(section, key)
        except ValueError:
            raise self.error(section, key, f"expected true/false, got {value!r}") from None


def _field_of(exc):
    return str(exc).split(" ", 1)[0]


def parse_config(text: str) -> RunConfig:
    """Parse a configuration document into a fully populated RunConfig."""
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(str(exc).splitlines()[0], line=line) from None
    lines = _line_index(text)
    for section in parser.sections():
        if section == MANIFEST_SECTION:
            continue
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", key=section, line=lines.get(section))
        for key in parser.options(section):
            if key not in SCHEMA[section]:
                path = f"{section}.{key}"
                raise ConfigError("unknown key", key=path, line=lines.get(path))
    r = _Reader(parser, lines)
    base = ModelParams()

    # hawkes channels, validated one at a time so errors name the channel
    shared_mean = r.number("hawkes", "mark_mean", base.channels[0].marks.mean)
    shared_cap = r.number("hawkes", "mark_cap", base.channels[0].marks.cap)
    channels = []
    for i, ch in enumerate(base.channels, start=1):
        mean = r.number("hawkes", f"mark_mean_{i}", shared_mean)
        cap = r.number("hawkes", f"mark_cap_{i}", shared_cap)
        try:
            marks = MarkDistribution(mean, cap)
        except DomainError as exc:
            key = f"mark_mean_{i}" if "mean" in str(exc) else f"mark_cap_{i}"
            if not parser.has_option("hawkes", key):
                key = key.rsplit("_", 1)[0]
            raise r.error("hawkes", key, str(exc)) from None
        lam0 = r.number("hawkes", f"lambda0_{i}", ch.lambda0)
        alpha = r.number("hawkes", f"alpha{i}", ch.alpha)
        beta = r.number("hawkes", f"beta{i}", ch.beta)
        try:
            channels.append(HawkesChannel(lam0, alpha, beta, marks))
        except DomainError as exc:
            name = _field_of(exc)
            key = {"lambda0": f"lambda0_{i}", "beta": f"beta{i}"}.get(name, f"alpha{i}")
            if name == "branching" and not parser.has_option("hawkes", key):
                key = f"beta{i}"
            raise r.error("hawkes", key, str(exc)) from None

    rates = {name: r.number("model", name, getattr(base, name)) for name in RATE_FIELDS}
    sigma = []
    for i in range(1, 9):
        s = r.number("model", f"sigma{i}", base.sigma[i - 1])
        if s < 0:
            raise r.error("model", f"sigma{i}", "volatility must be >= 0")
        sigma.append(s)
    truncated = r.boolean("model", "truncated_mark_mean", base.truncated_mark_mean)
    try:
        params = ModelParams(**rates, sigma=tuple(sigma), channels=tuple(channels),
                             truncated_mark_mean=truncated)
    except DomainError as exc:
        raise r.error("model", _field_of(exc), str(exc)) from None

    base_bounds = StructuralBounds()
    bvals = {k: r.number("bounds", k, getattr(base_bounds, k)) for k in BOUND_KEYS}
    try:
        bounds = StructuralBounds(**bvals)
    except DomainError as exc:
        raise r.error("bounds", _field_of(exc), str(exc)) from None

    base_sim = SimConfig()
    state = State(*(r.number("simulation", k, getattr(base_sim.initial_state, k)) for k in STATE_KEYS))
    try:
        sim = SimConfig(
            dt=r.number("simulation", "dt", base_sim.dt),
            horizon=r.number("simulation", "horizon", base_sim.horizon),
            n_paths=r.integer("simulation", "n_paths", base_sim.n_paths),
            master_seed=r.integer("simulation", "master_seed", base_sim.master_seed),
            initial_state=state,
            positivity_floor=r.number("simulation", "positivity_floor", base_sim.positivity_floor),
        )
    except DomainError as exc:
        name = _field_of(exc)
        key = name if name in SIM_KEYS else "s_h"
        raise r.error("simulation", key, str(exc)) from None

    out = r.raw("output", "directory") or "out"
    cfg = RunConfig(params, bounds, sim, out, r.provenance)
    for key in cfg.defaulted():
        log.debug("%s defaulted from baseline", key)
    return cfg


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def config_sections(cfg: RunConfig) -> dict:
    """Every key of ``cfg`` as ``{section: {key: text}}``."""
    p, b, s = cfg.params, cfg.bounds, cfg.sim
    model = {name: _fmt(getattr(p, name)) for name in RATE_FIELDS}
    model.update({f"sigma{i}": _fmt(v) for i, v in enumerate(p.sigma, start=1)})
    model["truncated_mark_mean"] = _fmt(p.truncated_mark_mean)
    hawkes = {}
    for i, ch in enumerate(p.channels, start=1):
        hawkes[f"lambda0_{i}"] = _fmt(ch.lambda0)
        hawkes[f"alpha{i}"] = _fmt(ch.alpha)
        hawkes[f"beta{i}"] = _fmt(ch.beta)
        hawkes[f"mark_mean_{i}"] = _fmt(ch.marks.mean)
        hawkes[f"mark_cap_{i}"] = _fmt(ch.marks.cap)
    sim = {
        "dt": _fmt(s.dt),
        "horizon": _fmt(s.horizon),
        "n_paths": _fmt(int(s.n_paths)),
        "master_seed": _fmt(int(s.master_seed)),
        "positivity_floor": _fmt(s.positivity_floor),
    }
    sim.update({k: _fmt(v) for k, v in zip(STATE_KEYS, s.initial_state)})
    return {
        "model": model,
        "bounds": {k: _fmt(getattr(b, k)) for k in BOUND_KEYS},
        "hawkes": hawkes,
        "simulation": sim,
        "output": {"directory": cfg.output_dir},
    }


def render_sections(sections: dict) -> str:
    chunks = []
    for name, items in sections.items():
        body = "\n".join(f"{k} = {v}" for k, v in items.items())
        chunks.append(f"[{name}]\n{body}\n")
    return "\n".join(chunks)


def serialize_config(cfg: RunConfig) -> str:
    return render_sections(config_sections(cfg))


def with_overrides(cfg: RunConfig, *, seed=None, paths=None, horizon=None, dt=None, output_dir=None) -> RunConfig:
    """Apply command-line overrides, marking them in the provenance."""
    changes = {}
    prov = dict(cfg.provenance)
    for key, value in (("master_seed", seed), ("n_paths", paths), ("horizon", horizon), ("dt", dt)):
        if value is not None:
            changes[key] = value
            prov[f"simulation.{key}"] = "cli"
    try:
        sim = replace(cfg.sim, **changes)
    except DomainError as exc:
        raise ConfigError(str(exc), key="simulation." + _field_of(exc)) from None
    out = cfg.output_dir
    if output_dir is not None:
        out = output_dir
        prov["output.directory"] = "cli"
    return RunConfig(cfg.params, cfg.bounds, sim, out, prov)

