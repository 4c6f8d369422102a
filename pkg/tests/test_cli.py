import json

import numpy as np
import pytest
import yaml

from gaugetrace.cli import main
from gaugetrace.errors import ConfigError
from gaugetrace.registry import build_scenario, load_preset, make_chart


def small_config(**overrides):
    config = {
        "name": "tiny",
        "dims": {"n": 1, "m": 2},
        "box": {"half_width": 2.0, "height": 0.6},
        "quadrature": {"n_lat": 16, "n_vert": 8, "grading": 2.0, "r_excl": 1.0},
        "steps": 32,
        "seed": 11,
        "analysis": {"s": "auto", "p": 2, "beta": "auto"},
        "connection": {"family": "flux-abelian", "B": 1.0},
        "gauge": {"kind": "abelian-phase", "amplitude": 0.6, "wave": [0.9, 0.5]},
        "field": {"family": "gaussian-bump", "amplitude": [1.0, 0.4], "width": 0.45,
                  "center": [0.0, 0.12], "core": 0.5, "outer": 0.9},
        "boundary_field": {"family": "gaussian-bump", "amplitude": [0.9, -0.4],
                           "width": 0.5, "center": [0.0], "core": 0.55, "outer": 0.95},
        "sweep": {"triangles": 25},
    }
    config.update(overrides)
    return config


def write_config(tmp_path, config, name="config.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(config))
    return str(path)


def test_presets_load_and_build():
    for name in ("abelian-n1", "so3-n1", "abelian-n2", "zero-n1"):
        sc = build_scenario(load_preset(name))
        assert sc.name == name
    with pytest.raises(ConfigError):
        load_preset("no-such-preset")


def test_scenario_validation_errors():
    with pytest.raises(ConfigError):
        build_scenario({"dims": {"n": 1, "m": 2}})  # missing sections
    bad = small_config()
    del bad["dims"]["m"]
    with pytest.raises(ConfigError):
        build_scenario(bad)
    mismatched = small_config(connection={"family": "constant-so3",
                                          "coeffs": [[1, 0, 0], [0, 1, 0]]})
    with pytest.raises(ConfigError):
        build_scenario(mismatched)


def test_chart_registry_kinds():
    for spec in ({"kind": "identity"}, {"kind": "dilation", "factor": 2.0},
                 {"kind": "rotation", "angle": 0.3},
                 {"kind": "shear", "eps": [0.1, 0.1], "wave": [0.7, 0.2]}):
        chart = make_chart(spec, 2)
        pts = np.array([[0.1, 0.4], [-0.3, 0.2]])
        assert chart.map_points(pts).shape == (2, 2)
        assert chart.jacobians(pts).shape == (2, 2, 2)


def test_cli_transport_suite(tmp_path, capsys):
    cfg = write_config(tmp_path, small_config())
    code = main(["transport", "--config", cfg, "--out", str(tmp_path / "out")])
    assert code == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert report["schema_version"] == 1
    assert all(r["status"] == "pass" for r in report["rows"])
    csv_text = (tmp_path / "out" / "report.csv").read_text()
    assert csv_text.startswith("# gaugetrace report")


def test_cli_holonomy_zero_connection(tmp_path):
    cfg = write_config(tmp_path, small_config(
        connection={"family": "zero", "m": 2}, gauge=None))
    code = main(["holonomy", "--config", cfg, "--out", str(tmp_path / "out")])
    assert code == 0


def test_cli_malformed_config_exit_2(tmp_path):
    bad = small_config()
    del bad["dims"]["m"]
    cfg = write_config(tmp_path, bad)
    assert main(["transport", "--config", cfg, "--out", str(tmp_path / "out")]) == 2
    not_yaml = tmp_path / "broken.yaml"
    not_yaml.write_text("{:::")
    assert main(["transport", "--config", str(not_yaml),
                 "--out", str(tmp_path / "out")]) == 2
    assert main(["transport", "--config", "missing-preset",
                 "--out", str(tmp_path / "out")]) == 2


def test_cli_deterministic_csv_body(tmp_path):
    cfg = write_config(tmp_path, small_config())
    out1, out2 = tmp_path / "o1", tmp_path / "o2"
    assert main(["curvature", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["curvature", "--config", cfg, "--out", str(out2)]) == 0

    def body(p):
        lines = (p / "report.csv").read_text().splitlines()
        assert lines[0].startswith("#")
        return "\n".join(lines[1:])

    assert body(out1) == body(out2)


def test_cli_seed_override_changes_draws(tmp_path):
    cfg = write_config(tmp_path, small_config())
    out1, out2 = tmp_path / "s1", tmp_path / "s2"
    assert main(["transport", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["transport", "--config", cfg, "--seed", "99",
                 "--out", str(out2)]) == 0
    r1 = json.loads((out1 / "report.json").read_text())
    r2 = json.loads((out2 / "report.json").read_text())
    assert r1["seed"] == 11 and r2["seed"] == 99


def test_cli_pullback_and_seminorm(tmp_path):
    cfg = write_config(tmp_path, small_config())
    assert main(["pullback-check", "--config", cfg, "--out", str(tmp_path / "p")]) == 0
    assert main(["seminorm", "--config", cfg, "--refine", "2",
                 "--out", str(tmp_path / "s")]) == 0
