import json

import numpy as np
import pytest

from errors import DomainError
from pipeline import EXIT_OK, EXIT_USAGE, main, parse_grid


def read_comments(path):
    return {
        line[2:].split("=", 1)[0]: line[2:].split("=", 1)[1].strip()
        for line in path.read_text().splitlines()
        if line.startswith("# ")
    }


def test_parse_grid():
    ys = parse_grid("0:5:0.01")
    assert ys.size == 501
    assert ys[0] == 0.0
    assert ys[-1] == pytest.approx(5.0)
    with pytest.raises(DomainError):
        parse_grid("0:5")
    with pytest.raises(DomainError):
        parse_grid("0:5:-1")


def test_kernel_csv(tmp_path, capsys):
    out = tmp_path / "kernel.csv"
    code = main(["kernel", "--t", "1", "--x", "0", "--beta", "1", "--grid", "0:2:0.5", "--output", str(out)])
    assert code == EXIT_OK
    comments = read_comments(out)
    assert float(comments["atom"]) == pytest.approx(0.42758, abs=1e-5)
    assert json.loads(comments["config"])["command"] == "kernel"
    rows = [line for line in out.read_text().splitlines() if not line.startswith("#")]
    assert rows[0] == "t,x,y,density,atom,mass,cdf"
    assert len(rows) == 1 + 5
    first = rows[1].split(",")
    assert float(first[0]) == 1.0 and float(first[1]) == 0.0 and float(first[2]) == 0.0
    assert float(first[4]) == float(comments["atom"])
    assert float(first[5]) == pytest.approx(1.0, abs=1e-6)
    assert "kernel: atom=" in capsys.readouterr().out


def test_kernel_default_location(artifact_dir):
    assert main(["kernel", "--grid", "0:1:0.5"]) == EXIT_OK
    assert (artifact_dir / "kernel" / "t1_x0_beta1.csv").exists()


def test_unknown_config_field(tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"t": 1.0, "sigma": 2.0}))
    assert main(["kernel", "--config", str(config)]) == EXIT_USAGE


def test_invalid_values_are_usage_errors(tmp_path):
    assert main(["kernel", "--beta", "-1"]) == EXIT_USAGE
    assert main(["kernel", "--grid=-1:1:0.5"]) == EXIT_USAGE
    assert main(["validate", "--suite", "nonsense"]) == EXIT_USAGE
    assert main(["kernel", "--config", str(tmp_path / "missing.json")]) == EXIT_USAGE


def test_simulate_is_byte_identical(tmp_path):
    args = ["simulate", "--horizon", "0.5", "--dt", "0.05", "--paths", "20", "--seed", "7", "--x", "0.3"]
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main([*args, "--output", str(first)]) == EXIT_OK
    assert main([*args, "--output", str(second)]) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()
    assert read_comments(first)["noise_exact"] == "true"


def test_simulate_euler_json(tmp_path):
    out = tmp_path / "euler.json"
    code = main(
        ["simulate", "--sampler", "euler", "--model", "gaussian", "--n", "2", "--paths", "50", "--format", "json",
         "--output", str(out)]
    )
    assert code == EXIT_OK
    payload = json.loads(out.read_text())
    assert payload["paths"] == 50
    assert len(payload["mean_final"]) == 2
    assert payload["config"]["model"]["name"] == "gaussian"


def test_girsanov_estimate(tmp_path):
    out = tmp_path / "girsanov.json"
    args = ["girsanov", "--model", "gaussian", "--f", "one", "--paths", "500", "--dt", "0.02"]
    code = main([*args, "--output", str(out)])
    assert code == EXIT_OK
    payload = json.loads(out.read_text())
    assert abs(payload["estimate"] - 1.0) < 4 * payload["stderr"] + 0.05


def test_validate_writes_report(tmp_path):
    out = tmp_path / "report.json"
    assert main(["validate", "--suite", "wentzell", "--output", str(out)]) == EXIT_OK
    payload = json.loads(out.read_text())
    assert payload["passed"] is True
    assert payload["config"]["suite"] == "wentzell"
    assert payload["report"]["version"] == payload["config"]["version"]


def test_wetting_run(tmp_path):
    out = tmp_path / "wetting.json"
    code = main(["wetting", "--n", "2", "--horizon", "1", "--dt", "0.01", "--output", str(out)])
    assert code == EXIT_OK
    payload = json.loads(out.read_text())
    assert len(payload["occupation_fraction"]) == 2
    assert all(0.0 <= v <= 1.0 for v in payload["stationary_fraction"])
    assert np.isclose(payload["horizon"], 1.0)
