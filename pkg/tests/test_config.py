import math
from pathlib import Path

import pytest
import yaml

from mixedqp.config import ConfigError, load_config, parse_experiment

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


def load_raw(name: str) -> dict:
    return yaml.safe_load((CONFIG_DIR / name).read_text())


@pytest.mark.parametrize(
    "name",
    [
        "ergodicity_rational.yaml",
        "ergodicity_golden.yaml",
        "base_ldt_coin.yaml",
        "lyapunov_diag.yaml",
        "fiber_ldt_walk.yaml",
        "semicontinuity_diag.yaml",
        "schrodinger_scan_free.yaml",
        "schrodinger_scan_noisy.yaml",
        "wasserstein_cocycle.yaml",
    ],
)
def test_shipped_configs_parse(name):
    config = load_config(CONFIG_DIR / name)
    assert config.kind in name.replace("_", "-")
    assert config.resolved["experiment"] == config.kind


def test_defaults_are_resolved_and_echoed():
    raw = load_raw("lyapunov_diag.yaml")
    config = parse_experiment(raw)
    assert config.threads == 1
    assert config.plots is True
    assert config.resolved["threads"] == 1
    assert config.resolved["theta_policy"] == "haar"
    assert config.resolved["skip_ergodicity_check"] is False


def test_unknown_experiment_rejected():
    with pytest.raises(ConfigError) as err:
        parse_experiment({"experiment": "banana"})
    assert err.value.path == "experiment"


def test_bad_weights_error_names_the_measure():
    raw = load_raw("lyapunov_diag.yaml")
    raw["measure"]["atoms"][0]["weight"] = 0.9
    with pytest.raises(ConfigError) as err:
        parse_experiment(raw)
    assert err.value.path == "measure"
    assert "0.9" in err.value.message


def test_unknown_fiber_kind_names_the_node():
    raw = load_raw("lyapunov_diag.yaml")
    raw["measure"]["atoms"][0]["fiber"] = {"kind": "rotation", "angle": 0.2}
    with pytest.raises(ConfigError) as err:
        parse_experiment(raw)
    assert err.value.path == "measure.atoms[0].fiber.kind"
    assert "rotation" in err.value.message


def test_non_unimodular_matrix_rejected():
    raw = load_raw("lyapunov_diag.yaml")
    raw["measure"]["atoms"][0]["fiber"] = {"kind": "const", "matrix": [[2.0, 0.0], [0.0, 1.0]]}
    with pytest.raises(ConfigError) as err:
        parse_experiment(raw)
    assert "determinant" in err.value.message


def test_missing_required_field_has_path():
    raw = load_raw("fiber_ldt_walk.yaml")
    del raw["epsilon"]
    with pytest.raises(ConfigError) as err:
        parse_experiment(raw)
    assert "epsilon" in str(err.value)


def test_observable_table_coverage_checked():
    raw = load_raw("base_ldt_coin.yaml")
    del raw["observable"]["table"]["1"]
    with pytest.raises(ConfigError) as err:
        parse_experiment(raw)
    assert err.value.path == "observable.table"


def test_observable_index_range_checked():
    raw = load_raw("base_ldt_coin.yaml")
    raw["observable"]["table"]["7"] = 1.0
    with pytest.raises(ConfigError) as err:
        parse_experiment(raw)
    assert "out of range" in err.value.message


def test_trig_conjugate_autocompletion():
    raw = load_raw("ergodicity_rational.yaml")
    config = parse_experiment(raw)
    poly = config.params["cesaro"]["polynomial"]
    assert poly.coeff((2,)) == 1.0
    assert poly.coeff((-2,)) == 1.0


def test_energy_range_expansion():
    raw = load_raw("schrodinger_scan_free.yaml")
    config = parse_experiment(raw)
    energies = config.params["energies"]
    assert energies[0] == pytest.approx(-3.0)
    assert energies[-1] == pytest.approx(3.0)
    assert len(energies) == 25


def test_energy_default_grid_resolved():
    raw = load_raw("schrodinger_scan_free.yaml")
    del raw["energies"]
    config = parse_experiment(raw)
    assert config.resolved["energies"]["default"] is True
    # bound = 2 + 0 + 0, step 0.01 -> 401 points
    assert config.resolved["energies"]["count"] == 401


def test_schrodinger_model_build():
    raw = load_raw("schrodinger_scan_noisy.yaml")
    config = parse_experiment(raw)
    model = config.params["model"]
    nu = model.driving_measure(1.0)
    assert len(nu) == 2
    assert math.fsum(nu.weights) == pytest.approx(1.0)


def test_theta_policy_forms():
    raw = load_raw("lyapunov_diag.yaml")
    raw["theta_policy"] = {"fixed": [0.25]}
    config = parse_experiment(raw)
    assert config.params["theta_policy"] == "fixed"
    assert config.params["theta"].coords == (0.25,)
    raw["theta_policy"] = "spiral"
    with pytest.raises(ConfigError):
        parse_experiment(raw)


def test_unknown_top_level_key_rejected():
    raw = load_raw("lyapunov_diag.yaml")
    raw["samples_per_n"] = 10
    with pytest.raises(ConfigError) as err:
        parse_experiment(raw)
    assert "samples_per_n" in err.value.message


def test_yaml_parse_error_reports_position(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("experiment: lyapunov\n  indent: wrong\n")
    with pytest.raises(ConfigError) as err:
        load_config(bad)
    assert "line" in err.value.message


def test_wasserstein_torus_space():
    raw = {
        "experiment": "wasserstein",
        "space": "torus",
        "left": {"atoms": [{"point": [0.0], "weight": 1.0}]},
        "right": {"atoms": [{"point": [0.5], "weight": 1.0}]},
    }
    config = parse_experiment(raw)
    assert config.params["space"] == "torus"
    assert config.params["grids"] == []
