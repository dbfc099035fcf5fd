import json
import math
from decimal import Decimal
from fractions import Fraction

import numpy as np
import pytest
import yaml
from typer.testing import CliRunner

from experiments.coordination import EXIT_CONFIG_ERROR, EXIT_PASSED, EXIT_VIOLATION
from experiments.experiment_config import list_presets, load_config
from experiments.system_builder import build_system
from experiments.report_utils import clean_payload
from main import app

runner = CliRunner()


def _write_config(tmp_path, raw):
    path = tmp_path / "experiment.yaml"
    path.write_text(yaml.safe_dump(raw))
    return str(path)


def test_presets_list():
    result = runner.invoke(app, ["presets", "list"])
    assert result.exit_code == EXIT_PASSED
    names = {preset["name"] for preset in list_presets()}
    assert {"psl-preset", "validate-perturbed-theta", "fejer-z"} <= names


@pytest.mark.parametrize("name", [preset["name"] for preset in list_presets()])
def test_shipped_presets_parse(name):
    config = load_config(name)
    assert config.seed == 20240101


def test_psl_preset_run_writes_report(tmp_path):
    result = runner.invoke(app, ["run", "psl-preset", "--output-dir", str(tmp_path)])
    assert result.exit_code == EXIT_PASSED, result.output
    report = json.loads((tmp_path / "psl-preset.json").read_text())
    assert {"experiment", "seed", "system", "parameters", "passed", "results", "generated_at"} <= set(report)
    assert report["passed"] is True
    assert report["seed"] == 20240101


def test_seed_override(tmp_path):
    result = runner.invoke(app, ["run", "psl-preset", "--seed", "7", "--output-dir", str(tmp_path)])
    assert result.exit_code == EXIT_PASSED
    assert json.loads((tmp_path / "psl-preset.json").read_text())["seed"] == 7


def test_perturbed_cocycle_is_a_violation(tmp_path):
    result = runner.invoke(app, ["run", "validate-perturbed-theta", "--output-dir", str(tmp_path)])
    assert result.exit_code == EXIT_VIOLATION
    report = json.loads((tmp_path / "validate-perturbed-theta.json").read_text())
    assert report["passed"] is False


def test_validate_command():
    result = runner.invoke(app, ["validate", "fejer-z"])
    assert result.exit_code == EXIT_PASSED
    assert "fejer" in result.output


@pytest.mark.parametrize(
    "raw",
    [
        {"experiment": "fejer", "system": {"group": {"family": "Z^d"}}},
        {"experiment": "fejer", "seed": 1, "system": {"group": {"family": "Z^d"}}, "colour": "red"},
        {"experiment": "bogus", "seed": 1},
        {"experiment": "fejer", "seed": 1},
        {"experiment": "validate", "seed": 1, "system": {"group": {"family": "finite-cyclic"}}},
        {"experiment": "validate", "seed": 1, "system": {"group": {"family": "Z^d"}, "cocycle": {"kind": "theta"}}},
    ],
)
def test_bad_configs_exit_with_config_error(tmp_path, raw):
    path = _write_config(tmp_path, raw)
    result = runner.invoke(app, ["run", path, "--output-dir", str(tmp_path)])
    assert result.exit_code == EXIT_CONFIG_ERROR


def test_missing_config_is_a_config_error():
    result = runner.invoke(app, ["validate", "no-such-preset"])
    assert result.exit_code == EXIT_CONFIG_ERROR


def test_clean_payload():
    cleaned = clean_payload({"a": float("nan"), "b": 1 + 2j, "c": Fraction(1, 3), "d": np.array([1, 2]), 3: np.float64(0.5)})
    assert cleaned["a"] is None
    assert cleaned["b"] == [Decimal("1"), Decimal("2")]
    assert cleaned["c"] == "1/3"
    assert cleaned["d"] == [1, 2]
    assert cleaned["3"] == Decimal("0.5")
    assert clean_payload(math.inf) is None


@pytest.mark.parametrize("family", ["free-F2", "free-product-Z2-Z3"])
def test_ideals_on_non_amenable_groups(tmp_path, family):
    raw = {
        "experiment": "ideals",
        "seed": 20240101,
        "system": {"algebra": [1, 1], "group": {"family": family}},
        "parameters": {"samples": 8, "support_radius": 1, "e_samples": 4},
    }
    result = runner.invoke(app, ["run", _write_config(tmp_path, raw), "--output-dir", str(tmp_path)])
    assert result.exit_code == EXIT_PASSED, result.output
    report = json.loads((tmp_path / "experiment.json").read_text())
    assert report["results"]["n_ideals"] == 4


def test_unitary_twisted_approximation_data(tmp_path):
    result = runner.invoke(app, ["run", "approx-net-unitary-z12", "--output-dir", str(tmp_path)])
    assert result.exit_code == EXIT_PASSED, result.output
    report = json.loads((tmp_path / "approx-net-unitary-z12.json").read_text())
    assert report["results"]["data"] == "tensor-unitary"
    assert report["results"]["rank"] == 3
    assert report["results"]["fejer_kernel_gap"] <= 1e-9


def test_unknown_approximation_data_is_a_config_error(tmp_path):
    raw = {
        "experiment": "approx-net",
        "seed": 1,
        "system": {"group": {"family": "finite-cyclic", "n": 12}},
        "parameters": {"data": "endomorphism-of-nothing", "sizes": [1]},
    }
    result = runner.invoke(app, ["run", _write_config(tmp_path, raw), "--output-dir", str(tmp_path)])
    assert result.exit_code == EXIT_CONFIG_ERROR


def test_table_cocycle_preset_passes(tmp_path):
    result = runner.invoke(app, ["run", "table-cocycle-z2", "--output-dir", str(tmp_path)])
    assert result.exit_code == EXIT_PASSED, result.output


def test_table_cocycle_breaking_the_identity_is_a_violation(tmp_path):
    raw = {
        "experiment": "validate",
        "seed": 1,
        "system": {
            "group": {"family": "finite-cyclic", "n": 3},
            "cocycle": {"kind": "table", "table": [{"g": "x", "h": "x", "turns": "1/4"}]},
        },
    }
    result = runner.invoke(app, ["run", _write_config(tmp_path, raw), "--output-dir", str(tmp_path)])
    assert result.exit_code == EXIT_VIOLATION


@pytest.mark.parametrize(
    "system",
    [
        {"group": {"family": "Z^d"}, "action": {"kind": "table", "table": {"x": {"permutation": [0]}}}},
        {"group": {"family": "finite-cyclic", "n": 2}, "action": {"kind": "table"}},
        {"group": {"family": "finite-cyclic", "n": 2}, "cocycle": {"kind": "table", "table": [{"g": "x", "h": "x", "turns": "p/q"}]}},
    ],
)
def test_bad_tables_are_config_errors(tmp_path, system):
    raw = {"experiment": "validate", "seed": 1, "system": system}
    result = runner.invoke(app, ["run", _write_config(tmp_path, raw), "--output-dir", str(tmp_path)])
    assert result.exit_code == EXIT_CONFIG_ERROR


def test_table_cocycle_builds_the_configured_phase():
    system = build_system(load_config("table-cocycle-z2").system)
    x = system.group.normal_form("x")
    assert system.sigma(x, x).is_close(system.algebra.scalar(-1.0))
    assert system.sigma(system.group.identity, x).is_close(system.algebra.unit())
    assert system.alpha(x).perm == (1, 0)
    assert "cocycle-table" in system.provenance
