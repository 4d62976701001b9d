import json

import pytest

from weaktraj import cli
from weaktraj.scenarios import bundled_scenarios

from test_scenarios import MINI


@pytest.fixture(scope="module")
def mini_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "mini.yaml"
    path.write_text(MINI)
    return str(path)


def test_scenario_list(capsys):
    assert cli.main(["scenario", "list"]) == 0
    out = capsys.readouterr().out
    for name in bundled_scenarios():
        assert f"{name}:" in out


def test_scenario_describe(capsys):
    assert cli.main(["scenario", "describe", "fig2a"]) == 0
    out = capsys.readouterr().out
    assert "name: fig2a" in out
    assert "meters:" in out


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--version"])
    assert exc.value.code == 0


def test_unknown_config_exits_2(tmp_path, capsys):
    code = cli.main(["classical", "--config", "no-such-scenario",
                     "--out", str(tmp_path)])
    assert code == cli.EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err


def test_invalid_yaml_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text(MINI.replace("meters:", "metres:"))
    code = cli.main(["classical", "--config", str(bad), "--out",
                     str(tmp_path / "out")])
    assert code == cli.EXIT_CONFIG


def test_classical_product(mini_path, tmp_path, capsys):
    out_dir = tmp_path / "out"
    assert cli.main(["classical", "--config", mini_path,
                     "--out", str(out_dir)]) == 0
    printed = capsys.readouterr().out.splitlines()
    assert any(line.endswith("trajectory_I.csv") for line in printed)
    assert (out_dir / "trajectory_I.csv").exists()
    assert (out_dir / "manifest.json").exists()


def test_pointer_product_with_seed(mini_path, tmp_path):
    out_dir = tmp_path / "out"
    assert cli.main(["pointer", "--config", mini_path, "--out", str(out_dir),
                     "--seed", "123"]) == 0
    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert manifest["seed"] == 123
    assert (out_dir / "pointer_readout.json").exists()


def test_numerical_failure_exits_3(tmp_path, capsys):
    # two branches that still overlap at the meter position: the closed-form
    # weak value refuses and the run fails with the numerical exit code
    text = MINI.replace(
        "    - {c: 1.0, p: [17.0, 7.0]}",
        "    - {c: 0.7, p: [17.0, 7.0]}\n    - {c: 0.7, p: [17.0, 7.1]}")
    bad = tmp_path / "overlap.yaml"
    bad.write_text(text)
    code = cli.main(["weak-traj", "--config", str(bad),
                     "--out", str(tmp_path / "out")])
    assert code == cli.EXIT_NUMERICAL
    assert "numerical failure" in capsys.readouterr().err


def test_validate_unknown_criteria_exits_2(capsys):
    assert cli.main(["validate", "--criteria", "42"]) == cli.EXIT_CONFIG


def test_validate_informational_check(tmp_path, capsys):
    # criterion 8 is informational and cheap once the scenario cache is warm
    code = cli.main(["validate", "--criteria", "8", "--out", str(tmp_path)])
    assert code == 0
    out = capsys.readouterr().out
    assert "criterion 8 [INFO]" in out
    report = json.loads((tmp_path / "acceptance_report.json").read_text())
    assert report[0]["id"] == 8
