import json
import subprocess
import sys

import pytest
from hypothesis import given, settings, strategies as st

from biphoton import cli
from biphoton.config import DEFAULTS, ScenarioConfig, parse_duration_fs, parse_grid
from biphoton.errors import ConfigError
from biphoton.tables import read_csv


def run(argv, capsys=None):
    code = cli.main(argv)
    return code, (capsys.readouterr() if capsys else None)


def test_list_names_every_scenario(capsys):
    code, cap = run(["list"], capsys)
    lines = cap.out.strip().split("\n")
    assert code == 0
    assert len(lines) == 10
    assert [ln.split()[0] for ln in lines] == list(cli.SCENARIO_NAMES)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "biphoton", "list"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "popper" in proc.stdout


@pytest.mark.parametrize("argv", [
    ["run", "no-such-scenario"],
    ["run", "notch", "--bogus", "1"],
    ["run", "popper", "--slit-a-mm", "-0.1"],
    ["run", "popper", "--slit-a-mm", "wide"],
    ["run", "notch", "--DL", "soon"],
    ["run", "notch", "--seed", "-3"],
    ["run", "popper", "--grid", "huge"],
    ["run", "notch", "--lambda-nm", "0"],
    ["run"],
])
def test_configuration_errors_exit_2(argv, tmp_path, capsys):
    code, cap = run(argv + ["--out", str(tmp_path)], capsys)
    assert code == 2
    assert "config error" in cap.err


def test_geometry_error_exits_3(tmp_path, capsys):
    code, cap = run(["run", "popper", "--so-mm", "900", "--out", str(tmp_path)], capsys)
    assert code == 3
    assert "physics error" in cap.err


def test_sampling_violation_exits_4_with_minimum_grid(tmp_path, capsys):
    code, cap = run(["run", "popper", "--grid", "4000:100", "--out", str(tmp_path)], capsys)
    assert code == 4
    assert "sampling violation" in cap.err
    assert not (tmp_path / "popper.csv").exists()


def test_bad_thread_setting_exits_2(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("BIPHOTON_THREADS", "many")
    code, cap = run(["run", "entropy", "--out", str(tmp_path)], capsys)
    assert code == 2 and "BIPHOTON_THREADS" in cap.err
    monkeypatch.setenv("BIPHOTON_THREADS", "1")
    assert run(["run", "entropy", "--out", str(tmp_path)])[0] == 0


def test_outputs_and_metadata(tmp_path, capsys):
    code, cap = run(["run", "notch", "--DL", "1ps", "--out", str(tmp_path), "--seed", "5"], capsys)
    assert code == 0
    assert cap.out.split() == [str(tmp_path / n) for n in
                               ("notch.csv", "notch-summary.json", "notch.gp.dat")]
    table = read_csv(tmp_path / "notch.csv")
    summary = json.loads((tmp_path / "notch-summary.json").read_text())
    assert table.columns == ("tau_fs", "rate", "envelope")
    assert table.metadata["seed"] == "5"
    assert table.metadata["config_hash"] == summary["config_hash"]
    assert summary["config"]["DL_fs"] == 1000.0
    assert summary["summary"]["envelope_base_half_width_fs"] == pytest.approx(1000, abs=1)
    assert (tmp_path / "notch.gp.dat").read_text().startswith("# tau_fs rate envelope\n")


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = {"scenario": "epr-stats", "seed": 11, "out": str(tmp_path / "from-file"),
           "params": {"n_pairs": 2000}}
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    assert run(["run", "--config", str(path)])[0] == 0
    summary = json.loads((tmp_path / "from-file" / "epr-stats-summary.json").read_text())
    assert summary["seed"] == 11 and summary["config"]["n_pairs"] == 2000
    assert run(["run", "--config", str(path), "--seed", "12", "--out", str(tmp_path / "o")])[0] == 0
    assert json.loads((tmp_path / "o" / "epr-stats-summary.json").read_text())["seed"] == 12
    code, cap = run(["run", "notch", "--config", str(path)], capsys)
    assert code == 2 and "scenario" in cap.err


@pytest.mark.parametrize("text", ["[1, 2]", "{not json", '{"scenario": "notch", "colour": 1}',
                                  '{"scenario": "notch", "params": 3}'])
def test_bad_config_files(tmp_path, text):
    path = tmp_path / "c.json"
    path.write_text(text)
    assert cli.main(["run", "--config", str(path), "--out", str(tmp_path)]) == 2
    assert cli.main(["run", "--config", str(tmp_path / "missing.json")]) == 2


def test_hash_ignores_seed_and_output(tmp_path):
    a = ScenarioConfig.build("popper", {"slit_b_mm": "open"}, "coarse", 1)
    b = ScenarioConfig.build("popper", {"slit_b_mm": "open"}, "coarse", 2)
    assert a.config_hash == b.config_hash
    for name, out in (("x", "a"), ("y", "b")):
        cfg = {"scenario": "entropy", "seed": 1 if name == "x" else 9, "out": str(tmp_path / out)}
        (tmp_path / f"{name}.json").write_text(json.dumps(cfg))
        assert cli.main(["run", "--config", str(tmp_path / f"{name}.json")]) == 0
    ha = json.loads((tmp_path / "a" / "entropy-summary.json").read_text())["config_hash"]
    hb = json.loads((tmp_path / "b" / "entropy-summary.json").read_text())["config_hash"]
    assert ha == hb


NUMERIC = [(s, k) for s, d in DEFAULTS.items() for k, v in d.items()
           if isinstance(v, (int, float)) and not isinstance(v, bool)]


@settings(max_examples=40)
@given(st.sampled_from(NUMERIC), st.sampled_from([1.5, 2.0, 3.0]))
def test_hash_changes_with_any_physics_field(case, factor):
    scenario, key = case
    base = ScenarioConfig.build(scenario)
    value = DEFAULTS[scenario][key] * factor + 1  # + 1 so zero defaults move too
    if isinstance(DEFAULTS[scenario][key], int):
        value = int(value)
    changed = ScenarioConfig.build(scenario, {key: value})
    assert changed.config_hash != base.config_hash
    assert ScenarioConfig.build(scenario, {key: DEFAULTS[scenario][key]}).config_hash == base.config_hash


def test_hash_follows_object_content(tmp_path):
    one, two = tmp_path / "one.pbm", tmp_path / "two.pbm"
    one.write_text("P1\n2 1\n1 0\n")
    two.write_text("P1\n2 1\n0 1\n")
    same = tmp_path / "same.pbm"
    same.write_text("P1\n2 1\n1 0\n")
    h = {p: ScenarioConfig.build("ghost-image", {"object": str(p)}).config_hash
         for p in (one, two, same)}
    assert h[one] == h[same] != h[two]
    assert ScenarioConfig.build("ghost-image", {}, "fine").config_hash != \
        ScenarioConfig.build("ghost-image", {}, "coarse").config_hash


def test_unreadable_object_is_config_error(tmp_path):
    assert cli.main(["run", "ghost-image", "--object", str(tmp_path / "nope.pbm"),
                     "--out", str(tmp_path)]) == 2
    blank = tmp_path / "blank.pbm"
    blank.write_text("P1\n2 2\n0 0 0 0\n")
    assert cli.main(["run", "ghost-image", "--object", str(blank), "--out", str(tmp_path)]) == 2


def test_parsers():
    assert parse_duration_fs("1ps") == 1000.0
    assert parse_duration_fs(" 250 fs ") == 250.0
    assert parse_duration_fs(42) == 42.0
    g = parse_grid("4000:100")
    assert g.n == 4000 and g.spacing == pytest.approx(1e-4) and g.as_text() == "4000:100"
    for bad in ("2:1", "10:0", "10:x"):
        with pytest.raises(ConfigError):
            parse_grid(bad)
    with pytest.raises(ConfigError):
        ScenarioConfig.build("notch", seed=2**64)
    with pytest.raises(ConfigError):
        ScenarioConfig.build("notch", {"n_tau": 10.5})
    with pytest.raises(ConfigError):
        ScenarioConfig.build("classical-image", {"mode": "laser"})
    with pytest.raises(ConfigError):
        ScenarioConfig.build("lithography-image", {"broadband": 1})
