"""Command-line front end.

    hawkesmpox r0 [--config FILE]
    hawkesmpox thresholds
    hawkesmpox simulate --out DIR --seed 7
    hawkesmpox ensemble --paths 80 --horizon 500 --dt 0.1 --workers 4
    hawkesmpox scan --x mu_h:1e-4:1e-2 --y mu_r:1e-6:1e-3 --resolution 50
    hawkesmpox validate-hawkes --channel 2

Every run writes ``manifest.ini`` (resolved config, seed, version) to the
output directory; feeding it back through ``--config`` reproduces the run.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import SCAN_AXES, hawkes_lln_check, hawkes_moment_check, scan_r0
from .config import RunConfig, config_sections, parse_config, render_sections, with_overrides
from .errors import ConfigError, DomainError
from .model import COMPARTMENTS, r0_terms, threshold_report
from .simulator import simulate_ensemble, simulate_path

log = logging.getLogger("hawkesmpox")

SUBCOMMANDS = ("r0", "thresholds", "simulate", "ensemble", "scan", "validate-hawkes")
PATH_HEADER = ("t",) + COMPARTMENTS


def fmt(x) -> str:
    """17 significant digits, scientific notation."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"refusing to write non-finite value {x}")
    return f"{x:.16e}"


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(c if isinstance(c, str) else fmt(c) for c in row) + "\n")


def write_path(path: Path, grid, states) -> None:
    write_csv(path, PATH_HEADER, (np.column_stack([grid, states])).tolist())


def write_manifest(out: Path, cfg: RunConfig, subcommand: str, extra=None) -> None:
    sections = {
        "manifest": {
            "subcommand": subcommand,
            "version": __version__,
            "master_seed": str(cfg.sim.master_seed),
            **(extra or {}),
        }
    }
    sections.update(config_sections(cfg))
    defaulted = cfg.defaulted()
    text = render_sections(sections)
    if defaulted:
        text = "# defaulted from the baseline parameter set: " + ", ".join(defaulted) + "\n" + text
    (out / "manifest.ini").write_text(text)


def _prepare_out(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror}") from None
    if not os.access(out, os.W_OK):
        raise OSError(f"output directory {out} is not writable")
    return out


def cmd_r0(cfg, args, out):
    terms = r0_terms(cfg.params)
    exponent = terms.denominator * (terms.r0 - 1.0)
    lines = [
        f"contact      (1-p)(eta1+eta2)           = {fmt(terms.contact)}",
        f"rodent       eta3                       = {fmt(terms.rodent)}",
        f"jump I_h     lambda0_2 G_2/(1-a2/b2)    = {fmt(terms.jump_infected)}",
        f"jump Q_h     lambda0_3 G_3/(1-a3/b3)    = {fmt(terms.jump_quarantined)}",
        f"denominator  min(mu)+min(delta)         = {fmt(terms.denominator)}",
        f"R0 = {terms.r0:.6f}",
        f"extinction_exponent = {exponent:.6e} per day",
    ]
    print("\n".join(lines))
    (out / "r0.txt").write_text("\n".join(lines) + "\n")
    write_manifest(out, cfg, "r0")
    return 0


def cmd_thresholds(cfg, args, out):
    rep = threshold_report(cfg.params, cfg.bounds)
    bounds_defaulted = cfg.defaulted("bounds")
    lines = []
    if bounds_defaulted:
        lines.append("# assumption: structural bounds taken from placeholders: " + ", ".join(bounds_defaulted))
    for name in ("r0", "extinction_exponent", "rodent_a", "rodent_bound",
                 "eps_h", "lambda_h", "lambda0_h", "human_bound"):
        value = getattr(rep, name)
        lines.append(f"{name} = {'absent' if value is None else fmt(value)}")
    lines.append("classification = " + ",".join(rep.classification))
    print("\n".join(lines))
    (out / "thresholds.txt").write_text("\n".join(lines) + "\n")
    write_manifest(out, cfg, "thresholds")
    return 0


def cmd_simulate(cfg, args, out):
    rec = simulate_path(cfg.params, cfg.sim, args.path_index)
    write_path(out / "path.csv", rec.grid, rec.states)
    for ev in rec.events:
        write_csv(out / f"events_channel_{ev.channel}.csv", ("t", "mark"), zip(ev.times, ev.marks))
    regular = cfg.sim.regular_grid()
    write_path(out / "mean_path.csv", regular, rec.on_grid(regular))
    write_manifest(out, cfg, "simulate", {"path_index": str(args.path_index)})
    print(f"path {args.path_index}: {rec.n_steps} steps, {rec.clamp_count} positivity clamps, "
          f"events per channel {[len(e) for e in rec.events]}")
    return 0


def cmd_ensemble(cfg, args, out):
    ens = simulate_ensemble(cfg.params, cfg.sim, workers=args.workers)
    for rec in ens.paths:
        write_path(out / f"path_{rec.path_index:04d}.csv", rec.grid, rec.states)
    for i in (1, 2, 3, 4):
        rows = []
        for rec in ens.paths:
            ev = rec.events[i - 1]
            rows.extend((str(rec.path_index), t, m) for t, m in zip(ev.times, ev.marks))
        write_csv(out / f"events_channel_{i}.csv", ("path", "t", "mark"), rows)
    if ens.paths:
        write_path(out / "mean_path.csv", ens.grid, ens.mean_states)
    extra = {"clamp_count": str(ens.clamp_count), "failed_paths": str(len(ens.failures))}
    write_manifest(out, cfg, "ensemble", extra)
    print(f"{len(ens.paths)} paths written, {ens.clamp_count} positivity clamps over {ens.step_count} steps")
    if ens.failures:
        for index, message in ens.failures:
            print(f"path {index} failed: {message}", file=sys.stderr)
        return 3
    return 0


def _axis(text):
    try:
        name, lo, hi = text.split(":")
        return name, float(lo), float(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected NAME:LOW:HIGH, got {text!r}") from None


def cmd_scan(cfg, args, out):
    scan = scan_r0(cfg.params, cfg.bounds, args.x, args.y, args.resolution)
    rows = ((x, y, scan.z[j, i]) for j, y in enumerate(scan.y_values) for i, x in enumerate(scan.x_values))
    write_csv(out / "scan_grid.csv", ("x", "y", "r0"), rows)
    write_csv(out / "scan_contour.csv", ("x", "y"), scan.threshold_contour)
    extra = {
        "x_axis": f"{args.x[0]}:{args.x[1]!r}:{args.x[2]!r}",
        "y_axis": f"{args.y[0]}:{args.y[1]!r}:{args.y[2]!r}",
        "resolution": str(args.resolution),
    }
    write_manifest(out, cfg, "scan", extra)
    print(f"{scan.z.size} grid cells, R0 in [{scan.z.min():.6g}, {scan.z.max():.6g}], "
          f"{len(scan.threshold_contour)} contour points")
    return 0


def cmd_validate(cfg, args, out):
    channel = cfg.params.channel(args.channel)
    seed = cfg.sim.master_seed
    rows = hawkes_moment_check(channel, n_paths=args.moment_paths, seed=seed)
    lln = hawkes_lln_check(channel, args.lln_horizon, args.lln_paths, seed=seed)
    table = [(r.quantity, r.t, r.expected, r.mean, r.stderr) for r in rows]
    table.append(("lln_rate", args.lln_horizon, lln.limit, lln.mean, lln.stderr))
    write_csv(out / "hawkes_validation.csv", ("quantity", "t", "expected", "mean", "stderr"), table)
    for r in rows:
        print(f"{r.quantity:9s} t={r.t:<6g} closed form {r.expected:.6e}  MC {r.mean:.6e} "
              f"+/- {r.stderr:.2e}  z={r.z:+.2f}")
    print(f"LLN       T={args.lln_horizon:<6g} limit {lln.limit:.6e}  MC {lln.mean:.6e} "
          f"+/- {lln.stderr:.2e}  rel.dev={lln.relative_deviation:.3%}")
    write_manifest(out, cfg, "validate-hawkes", {"channel": str(args.channel)})
    return 0


COMMANDS = {
    "r0": cmd_r0,
    "thresholds": cmd_thresholds,
    "simulate": cmd_simulate,
    "ensemble": cmd_ensemble,
    "scan": cmd_scan,
    "validate-hawkes": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="sectioned key-value config file")
    common.add_argument("--out", help="output directory (overrides [output] directory)")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--paths", type=int, help="ensemble size")
    common.add_argument("--horizon", type=float, help="days")
    common.add_argument("--dt", type=float, help="grid step, days")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="hawkesmpox", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, metavar="{" + ",".join(SUBCOMMANDS) + "}")
    sub.add_parser("r0", parents=[common], help="reproduction number with itemized terms")
    sub.add_parser("thresholds", parents=[common], help="extinction and persistence thresholds")
    p = sub.add_parser("simulate", parents=[common], help="one path")
    p.add_argument("--path-index", type=int, default=0)
    p = sub.add_parser("ensemble", parents=[common], help="seeded ensemble of paths")
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    p = sub.add_parser("scan", parents=[common], help="R0 over a parameter grid")
    p.add_argument("--x", type=_axis, default=("mu_h", 1e-4, 1e-2), help="NAME:LOW:HIGH, one of " + ", ".join(SCAN_AXES))
    p.add_argument("--y", type=_axis, default=("mu_r", 1e-6, 1e-3), help="NAME:LOW:HIGH")
    p.add_argument("--resolution", type=int, default=50)
    p = sub.add_parser("validate-hawkes", parents=[common], help="moment and LLN checks for one channel")
    p.add_argument("--channel", type=int, choices=(1, 2, 3, 4), default=2)
    p.add_argument("--moment-paths", type=int, default=5000)
    p.add_argument("--lln-horizon", type=float, default=1e6)
    p.add_argument("--lln-paths", type=int, default=50)
    return parser


def run_subcommand(name: str, cfg: RunConfig, args=None) -> int:
    if name not in COMMANDS:
        raise ConfigError(f"unknown subcommand {name!r}")
    if args is None:
        args = build_parser().parse_args([name])
    out = _prepare_out(cfg)
    return COMMANDS[name](cfg, args, out)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        text = args.config.read_text() if args.config else ""
        cfg = parse_config(text)
        cfg = with_overrides(cfg, seed=args.seed, paths=args.paths, horizon=args.horizon,
                             dt=args.dt, output_dir=args.out)
        return run_subcommand(args.command, cfg, args)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
