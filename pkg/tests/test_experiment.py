import json
from pathlib import Path

import numpy as np
import pytest
import yaml

from blockade_spdc import cli
from blockade_spdc.config import (ConfigError, load_config, parse_config, parse_number,
                                  validate_config)
from blockade_spdc.reproduce import FIGURES, reproduce
from blockade_spdc.sweep import csv_text, format_value, run_sweep

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def base(**extra):
    data = {"schema_version": 1, "units": "kappa_s",
            "system": {"eta": 80, "pump": 19,
                       "schedule": {"mode": "fixed", "tau_p": "pi/40", "total_window": 6}},
            "truncation": [6, 6], "seed": 0}
    data.update(extra)
    return data


def write(tmp_path, data, name="c.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return path


def test_parse_number():
    assert parse_number("pi/40") == pytest.approx(np.pi / 40)
    assert parse_number("2*pi") == pytest.approx(2 * np.pi)
    assert parse_number(3) == 3.0
    for bad in ("__import__('os')", "e", True, None):
        with pytest.raises(ValueError):
            parse_number(bad)


def test_reference_configs_validate_cleanly():
    for name in ("blockade_eta80", "pi_pulse_eta500", "trajectories_eta80"):
        assert validate_config(load_config(CONFIGS / f"{name}.yaml")) == []


def test_eta_and_medium_are_exclusive():
    cfg = parse_config(base(medium={"config": "type-I", "g4N": 2300}))
    issues = validate_config(cfg)
    assert any(i.level == "error" and "either" in i.message for i in issues)


def test_truncation_heuristic():
    data = base(truncation=[3, 3])
    del data["system"]["eta"]
    data["system"]["pump"] = 40
    issues = validate_config(parse_config(data))
    assert [i.level for i in issues] == ["warning"]
    assert "truncation" in issues[0].message


def test_schema_errors():
    with pytest.raises(ConfigError):
        parse_config(base(schema_version=2))
    with pytest.raises(ConfigError):
        parse_config(base(colour="blue"))
    data = base()
    data["system"]["pmp"] = 3
    with pytest.raises(ConfigError):
        parse_config(data)


def test_sweep_whitelist_and_empty_grid():
    cfg = parse_config(base(sweep=[{"parameter": "n_max", "grid": [1, 2]}]))
    assert any("cannot be swept" in i.message for i in validate_config(cfg))
    cfg = parse_config(base(sweep=[{"parameter": "pump", "grid": []}]))
    assert any("empty" in i.message for i in validate_config(cfg))
    with pytest.raises(ConfigError):
        run_sweep(cfg)


def test_single_point_sweep_row():
    cfg = parse_config(base(sweep=[{"parameter": "pump", "grid": [19]}]))
    res = run_sweep(cfg)
    assert res.columns[:3] == ("pump", "P11", "P22")
    assert res.columns[-3:] == ("seed", "purity_s35", "status")
    assert len(res.rows) == 1
    assert res.column("P11")[0] == pytest.approx(0.81, abs=0.03)
    assert res.column("g2")[0] == pytest.approx(0.09, abs=0.03)


def test_pi_area_sweep_point():
    data = base(sweep=[{"parameter": "pump", "grid": [6.6]}])
    data["system"]["schedule"] = {"mode": "pi-area", "total_window": 6}
    res = run_sweep(parse_config(data))
    assert res.column("P11")[0] == pytest.approx(0.80, abs=0.03)


def test_sweep_is_deterministic_and_ordered():
    cfg = parse_config(base(sweep=[{"parameter": "eta", "grid": [200, 80]},
                                   {"parameter": "pump", "grid": [10, 5]}], solver="both",
                            n_traj=50, seed=4))
    a = run_sweep(cfg)
    b = run_sweep(cfg, workers=2)
    assert csv_text(a.columns, a.rows) == csv_text(b.columns, b.rows)
    # First axis slowest, grid order as written, one row per solver.
    assert [(r[0], r[1]) for r in a.rows[::2]] == [(200, 10), (200, 5), (80, 10), (80, 5)]
    assert [r[a.columns.index("solver")] for r in a.rows[:2]] == ["me", "qt"]


def test_failed_point_is_flagged(monkeypatch):
    from blockade_spdc import sweep
    from blockade_spdc.master import SolverError

    def boom(*a, **k):
        raise SolverError("no")

    monkeypatch.setattr(sweep, "switchoff_distribution", boom)
    res = run_sweep(parse_config(base(sweep=[{"parameter": "pump", "grid": [1, 2]}])))
    assert all(r[-1].startswith("error") for r in res.rows)


def test_medium_supplies_eta():
    data = base(medium={"config": "type-I", "g4N": 2300, "omega_c": 15, "delta31": 18,
                        "delta42": 153})
    del data["system"]["eta"]
    res = run_sweep(parse_config(data))
    assert res.rows[0][-1] == "ok"


def test_float_format_round_trips():
    x = 0.1 + 0.2
    assert float(format_value(x)) == x
    assert format_value(None) == "undefined"
    assert format_value(True) == "true"


def test_cli_exit_codes(tmp_path, monkeypatch, capsys):
    good = write(tmp_path, base())
    assert cli.main(["evolve", "--config", str(good), "--out", str(tmp_path / "e")]) == 0
    header = (tmp_path / "e" / "evolve.csv").read_text().splitlines()[0]
    assert header == "time,P00,P11,P22,P33,nonpair_weight,trace_error"
    bad = write(tmp_path, base(truncation=[0, 3]), "bad.yaml")
    assert cli.main(["evolve", "--config", str(bad)]) == 2
    assert cli.main(["reproduce", "--figure", "fig99", "--out", str(tmp_path)]) == 2
    assert cli.main(["sweep", "--config", str(tmp_path / "missing.yaml")]) == 2

    from blockade_spdc.master import SolverError

    def boom(*a, **k):
        raise SolverError("diverged")

    monkeypatch.setattr(cli, "mesolve", boom)
    assert cli.main(["evolve", "--config", str(good), "--out", str(tmp_path)]) == 3


def test_cli_trajectories_and_herald_stats(tmp_path, capsys):
    data = base(n_traj=200, seed=3)
    data["system"]["pump"] = 18
    path = write(tmp_path, data)
    out = tmp_path / "t"
    assert cli.main(["trajectories", "--config", str(path), "--out", str(out), "--jump-log",
                     "--seed", "5"]) == 0
    assert (out / "jumps.csv").read_text().startswith("trajectory,time,channel")
    capsys.readouterr()
    assert cli.main(["herald-stats", "--input", str(out / "detected.csv")]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert set(summary) == {"alpha", "g2", "yield", "purity_s35", "purity_1mg2", "yp", "nonpair"}
    assert sum(summary["alpha"]) == pytest.approx(1.0)


def test_cli_kerr(tmp_path):
    out = tmp_path / "k"
    assert cli.main(["kerr", "--config", str(CONFIGS / "kerr_type_i.yaml"), "--out", str(out)]) == 0
    lines = (out / "kerr.csv").read_text().splitlines()
    assert lines[0] == "delta31,eta,delta,converged"
    assert len(lines) == 1 + 241


def test_reproduce_is_byte_identical_and_manifest_matches(tmp_path):
    a = reproduce("sm_cavity_decay", tmp_path / "a", seed=1)
    b = reproduce("sm_cavity_decay", tmp_path / "b", seed=1)
    assert (tmp_path / "a" / "sm_cavity_decay.csv").read_bytes() == \
        (tmp_path / "b" / "sm_cavity_decay.csv").read_bytes()
    manifest = json.loads((tmp_path / "a" / "sm_cavity_decay.json").read_text())
    assert manifest["passed"] == all(c.passed for c in a.checks)
    assert manifest["config_hash"] == b.manifest["config_hash"]
    assert {"seed", "tolerances", "checks"} <= set(manifest)


def test_reproduce_failure_exit_code(tmp_path):
    # The type-II scan does not meet its stored targets (see the README).
    assert cli.main(["reproduce", "--figure", "sm_kerr_scan_ii", "--out", str(tmp_path)]) == 4


def test_figure_registry_complete():
    assert set(FIGURES) == {"fig2a", "fig2b", "fig3a", "fig3b", "fig4", "sm_nonblockade",
                            "sm_kerr_scan_i", "sm_kerr_scan_ii", "sm_qt_single", "sm_qt_dual",
                            "sm_nonpair", "sm_cavity_decay", "sm_pipulse"}
