import configparser
from dataclasses import replace

import pytest

from hawkesmpox.cli import main
from hawkesmpox.config import parse_config, serialize_config, with_overrides
from hawkesmpox.errors import ConfigError
from hawkesmpox.model import ModelParams, StructuralBounds
from hawkesmpox.simulator import SimConfig


# --- parsing -----------------------------------------------------------------------

def test_empty_document_is_baseline():
    cfg = parse_config("")
    assert cfg.params == ModelParams()
    assert cfg.bounds == StructuralBounds()
    assert cfg.sim == SimConfig()
    assert "bounds.M" in cfg.defaulted("bounds")


def test_overrides_are_applied():
    cfg = parse_config("[model]\np = 0.5\n\n[hawkes]\nalpha2 = 0.4\nmark_cap = 5\n\n[simulation]\nn_paths = 7\n")
    assert cfg.params.p == 0.5
    assert cfg.params.channel(2).alpha == 0.4
    assert all(ch.marks.cap == 5.0 for ch in cfg.params.channels)
    assert cfg.sim.n_paths == 7
    assert "model.p" not in cfg.defaulted()


def test_out_of_range_probability_names_key_and_line():
    with pytest.raises(ConfigError) as info:
        parse_config("[model]\n\np = 1.5\n")
    assert info.value.key == "model.p"
    assert info.value.line == 3
    assert "model.p" in str(info.value)


def test_supercritical_channel_is_rejected():
    with pytest.raises(ConfigError) as info:
        parse_config("[hawkes]\nalpha2 = 1.0\nbeta2 = 0.5\n")
    assert "subcriticality" in str(info.value)
    assert info.value.key in ("hawkes.alpha2", "hawkes.beta2")


def test_unknown_key_and_section():
    with pytest.raises(ConfigError) as info:
        parse_config("[model]\nmu_x = 1\n")
    assert info.value.key == "model.mu_x" and info.value.line == 2
    with pytest.raises(ConfigError):
        parse_config("[extras]\na = 1\n")


def test_non_numeric_value():
    with pytest.raises(ConfigError) as info:
        parse_config("[simulation]\ndt = fast\n")
    assert info.value.key == "simulation.dt"


def test_round_trip():
    cfg = parse_config("[model]\nzeta = 0.01234567890123\nsigma3 = 0.1\n\n[simulation]\nmaster_seed = 99\n")
    again = parse_config(serialize_config(cfg))
    assert again == cfg
    cfg2 = with_overrides(cfg, seed=5, paths=3, horizon=20.0, dt=0.05, output_dir="x")
    assert parse_config(serialize_config(cfg2)) == cfg2


# --- CLI -------------------------------------------------------------------------------

def _run(tmp_path, *argv):
    return main(list(argv) + ["--out", str(tmp_path)])


def test_r0_subcommand(tmp_path, capsys):
    assert _run(tmp_path, "r0") == 0
    text = (tmp_path / "r0.txt").read_text()
    assert "R0 = 1.011578" in text and "denominator" in text
    assert (tmp_path / "manifest.ini").exists()


def test_thresholds_subcommand(tmp_path):
    assert _run(tmp_path, "thresholds") == 0
    text = (tmp_path / "thresholds.txt").read_text()
    assert text.startswith("# assumption")
    assert "classification =" in text and "lambda_h =" in text


def test_simulate_outputs(tmp_path):
    assert _run(tmp_path, "simulate", "--horizon", "20", "--seed", "4") == 0
    header = "t,S_h,I_h,Q_h,R_h,S_r,I_r"
    assert (tmp_path / "path.csv").read_text().splitlines()[0] == header
    assert (tmp_path / "mean_path.csv").read_text().splitlines()[0] == header
    for i in (1, 2, 3, 4):
        assert (tmp_path / f"events_channel_{i}.csv").read_text().splitlines()[0] == "t,mark"
    rows = (tmp_path / "mean_path.csv").read_text().splitlines()
    assert len(rows) == 1 + 201


def test_ensemble_outputs_and_manifest_rerun(tmp_path):
    first = tmp_path / "a"
    assert main(["ensemble", "--paths", "3", "--horizon", "15", "--seed", "11", "--out", str(first)]) == 0
    names = sorted(p.name for p in first.iterdir())
    assert names == sorted(["manifest.ini", "mean_path.csv", "path_0000.csv", "path_0001.csv", "path_0002.csv"]
                           + [f"events_channel_{i}.csv" for i in (1, 2, 3, 4)])
    assert (first / "events_channel_2.csv").read_text().startswith("path,t,mark\n")
    manifest = configparser.ConfigParser()
    manifest.read(first / "manifest.ini")
    assert manifest["manifest"]["master_seed"] == "11"
    second = tmp_path / "b"
    assert main(["ensemble", "--config", str(first / "manifest.ini"), "--out", str(second)]) == 0
    for name in names:
        if name != "manifest.ini":
            assert (first / name).read_bytes() == (second / name).read_bytes(), name


def test_scan_outputs(tmp_path):
    assert _run(tmp_path, "scan", "--resolution", "6") == 0
    grid = (tmp_path / "scan_grid.csv").read_text().splitlines()
    assert grid[0] == "x,y,r0" and len(grid) == 37
    assert (tmp_path / "scan_contour.csv").read_text().startswith("x,y\n")


def test_validate_hawkes_outputs(tmp_path):
    assert _run(tmp_path, "validate-hawkes", "--moment-paths", "40",
                "--lln-horizon", "1e4", "--lln-paths", "3") == 0
    lines = (tmp_path / "hawkes_validation.csv").read_text().splitlines()
    assert lines[0] == "quantity,t,expected,mean,stderr"
    assert len(lines) == 1 + 5 + 1


def test_numbers_are_written_with_17_digits(tmp_path):
    _run(tmp_path, "simulate", "--horizon", "2")
    first = (tmp_path / "path.csv").read_text().splitlines()[1].split(",")
    assert all(len(c.split("e")[0].replace("-", "").replace(".", "")) == 17 for c in first)


def test_bad_config_exits_nonzero(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[model]\np = 1.5\n")
    assert main(["r0", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "model.p" in capsys.readouterr().err


def test_unwritable_output_exits_nonzero(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["r0", "--out", str(blocker / "sub")]) == 2
    assert "output directory" in capsys.readouterr().err


def test_failed_paths_exit_code(tmp_path):
    cfg = tmp_path / "wild.ini"
    cfg.write_text("[model]\nsigma3 = 1e300\n")
    assert main(["ensemble", "--config", str(cfg), "--paths", "2", "--horizon", "5",
                 "--out", str(tmp_path / "o")]) == 3
