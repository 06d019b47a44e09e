"""Tests for TOML config parsing, validation, and presets."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from doabounds.config import (
    PRESETS,
    SnrGridSpec,
    build_config,
    parse_config,
)
from doabounds.errors import ParseError, ValidationError


def write_toml(tmp_path, text):
    path = tmp_path / "exp.toml"
    path.write_text(text, encoding="utf-8")
    return str(path)


MINIMAL = """
[scenario]
rx_elements = 20
tx_elements = 8
num_targets = 1
"""


def test_minimal_config_gets_documented_defaults(tmp_path):
    cfg = parse_config(write_toml(tmp_path, MINIMAL))
    assert cfg.scenario.snapshots == 40
    assert cfg.scenario.amplitude_second_moment == 0.5
    assert cfg.snr_grid.start_db == -30.0
    assert cfg.snr_grid.stop_db == 30.0
    assert cfg.snr_grid.step_db == 1.0
    assert cfg.scenario.prior_support_deg == (-60.0, 60.0)
    assert cfg.sweep.variable == "none"
    assert not cfg.simulation.enabled
    assert not cfg.oracle.enabled
    assert cfg.simulation.trials == 500
    assert cfg.simulation.seed == 12345
    assert cfg.output_path == "results.csv"


def test_snr_grid_values():
    grid = SnrGridSpec(start_db=-30.0, stop_db=30.0, step_db=1.0)
    vals = grid.values_db()
    assert vals.shape == (61,)
    assert vals[0] == -30.0 and vals[-1] == 30.0
    single = SnrGridSpec(start_db=5.0, stop_db=5.0, step_db=2.0).values_db()
    assert single.shape == (1,)


def test_zero_step_names_the_field(tmp_path):
    text = MINIMAL + "\n[snr_grid]\nstep_db = 0.0\n"
    with pytest.raises(ValidationError) as info:
        parse_config(write_toml(tmp_path, text))
    assert any("snr_grid.step_db" in e for e in info.value.errors)


def test_prior_endfire_exclusion(tmp_path):
    text = MINIMAL.replace(
        "num_targets = 1",
        "num_targets = 1\nprior_support_deg = [-85.0, 85.0]")
    cfg = parse_config(write_toml(tmp_path, text))
    assert cfg.scenario.prior_support_deg == (-85.0, 85.0)
    bad = MINIMAL.replace(
        "num_targets = 1",
        "num_targets = 1\nprior_support_deg = [-95.0, 95.0]")
    with pytest.raises(ValidationError) as info:
        parse_config(write_toml(tmp_path, bad))
    assert any("prior_support_deg" in e for e in info.value.errors)


def test_all_violations_reported_at_once(tmp_path):
    text = """
[scenario]
rx_elements = 0
tx_elements = 2
num_targets = 1
noise_power = -1.0

[snr_grid]
step_db = -3.0

[sweep]
variable = "bogus"

[simulation]
trials = 3
"""
    with pytest.raises(ValidationError) as info:
        parse_config(write_toml(tmp_path, text))
    joined = "\n".join(info.value.errors)
    for needle in ("scenario.rx_elements", "scenario.noise_power",
                   "snr_grid.step_db", "sweep.variable",
                   "simulation.trials"):
        assert needle in joined


def test_unknown_fields_rejected(tmp_path):
    text = MINIMAL + "\n[scenario2]\nx = 1\n"
    with pytest.raises(ValidationError) as info:
        parse_config(write_toml(tmp_path, text))
    assert any("scenario2" in e for e in info.value.errors)
    text = MINIMAL.replace("rx_elements = 20",
                           "rx_elements = 20\nrx_elments = 4")
    with pytest.raises(ValidationError) as info:
        parse_config(write_toml(tmp_path, text))
    assert any("rx_elments" in e for e in info.value.errors)


def test_missing_required_fields_named(tmp_path):
    with pytest.raises(ValidationError) as info:
        parse_config(write_toml(tmp_path, "[scenario]\nrx_elements = 4\n"))
    joined = "\n".join(info.value.errors)
    assert "scenario.tx_elements" in joined
    assert "scenario.num_targets" in joined


def test_malformed_toml_is_parse_error(tmp_path):
    with pytest.raises(ParseError):
        parse_config(write_toml(tmp_path, "[scenario\nrx_elements = 4"))
    with pytest.raises(ParseError):
        parse_config(str(tmp_path / "missing.toml"))


def test_sweep_value_typing(tmp_path):
    text = MINIMAL + """
[sweep]
variable = "tx_elements"
values = [1, 2, "four"]
"""
    with pytest.raises(ValidationError) as info:
        parse_config(write_toml(tmp_path, text))
    assert any("sweep.values[2]" in e for e in info.value.errors)
    empty = MINIMAL + "\n[sweep]\nvariable = \"num_targets\"\nvalues = []\n"
    with pytest.raises(ValidationError) as info:
        parse_config(write_toml(tmp_path, empty))
    assert any("sweep.values" in e for e in info.value.errors)
    stray = MINIMAL + "\n[sweep]\nvariable = \"none\"\nvalues = [1]\n"
    with pytest.raises(ValidationError):
        parse_config(write_toml(tmp_path, stray))


def test_oracle_requires_single_target(tmp_path):
    text = MINIMAL.replace("num_targets = 1", "num_targets = 2")
    text += "\n[oracle]\nenabled = true\n"
    with pytest.raises(ValidationError) as info:
        parse_config(write_toml(tmp_path, text))
    assert any("oracle.enabled" in e for e in info.value.errors)


def test_tx_covariance_matrix_accepted_and_validated(tmp_path):
    text = MINIMAL.replace("tx_elements = 8", "tx_elements = 2")
    text += "\n[scenario.tx_covariance]\n"  # wrong type: section not list
    with pytest.raises(ValidationError):
        parse_config(write_toml(tmp_path, text))
    good = MINIMAL.replace(
        "tx_elements = 8",
        "tx_elements = 2\ntx_covariance = [[1.0, 0.5], [0.5, 1.0]]")
    cfg = parse_config(write_toml(tmp_path, good))
    sc = cfg.scenario_for(None)
    assert_allclose(sc.tx_covariance, [[1.0, 0.5], [0.5, 1.0]])
    asym = MINIMAL.replace(
        "tx_elements = 8",
        "tx_elements = 2\ntx_covariance = [[1.0, 0.5], [0.2, 1.0]]")
    with pytest.raises(ValidationError):
        parse_config(write_toml(tmp_path, asym))
    indef = MINIMAL.replace(
        "tx_elements = 8",
        "tx_elements = 2\ntx_covariance = [[1.0, 2.0], [2.0, 1.0]]")
    with pytest.raises(ValidationError) as info:
        parse_config(write_toml(tmp_path, indef))
    assert any("positive semidefinite" in e for e in info.value.errors)


def test_tx_sweep_needs_identity_covariance(tmp_path):
    text = MINIMAL.replace(
        "tx_elements = 8",
        "tx_elements = 2\ntx_covariance = [[1.0, 0.0], [0.0, 1.0]]")
    text += "\n[sweep]\nvariable = \"tx_elements\"\nvalues = [1, 2]\n"
    with pytest.raises(ValidationError):
        parse_config(write_toml(tmp_path, text))


def test_presets_build_and_match_fixed_designs():
    fig1 = build_config(None, "fig1")
    assert fig1.scenario.rx_elements == 20
    assert fig1.scenario.num_targets == 1
    assert fig1.sweep.variable == "tx_elements"
    assert fig1.sweep.values == (1, 2, 4, 8, 16, 32)
    fig2 = build_config(None, "fig2")
    assert fig2.sweep.variable == "num_targets"
    assert fig2.sweep.values == (2, 5, 8)
    assert fig2.scenario.tx_elements == 32
    fig3 = build_config(None, "fig3")
    assert fig3.sweep.variable == "prior_support"
    assert fig3.sweep.values == ((-60.0, 60.0), (-85.0, 85.0))
    with pytest.raises(ValidationError):
        build_config(None, "fig9")


def test_preset_overridable_field_by_field(tmp_path):
    text = """
[scenario]
snapshots = 10

[snr_grid]
start_db = -5.0
stop_db = 5.0
step_db = 5.0
"""
    cfg = parse_config(write_toml(tmp_path, text), preset="fig1")
    assert cfg.scenario.snapshots == 10          # overridden
    assert cfg.scenario.rx_elements == 20        # from the preset
    assert cfg.sweep.values == (1, 2, 4, 8, 16, 32)
    assert cfg.snr_grid.values_db().shape == (3,)


def test_scenario_for_applies_sweep_values():
    cfg = build_config({
        "scenario": {"rx_elements": 4, "tx_elements": 8, "num_targets": 2},
        "sweep": {"variable": "tx_elements", "values": [1, 4]},
    })
    assert cfg.scenario_for(4).num_tx == 4
    assert cfg.scenario_for(1).num_tx == 1
    assert cfg.scenario_for(1).tx_covariance.shape == (1, 1)

    cfg = build_config({
        "scenario": {"rx_elements": 4, "tx_elements": 2, "num_targets": 2},
        "sweep": {"variable": "prior_support",
                  "values": [[-60.0, 60.0], [-85.0, 85.0]]},
    })
    sc = cfg.scenario_for((-85.0, 85.0))
    assert_allclose(sc.prior_support,
                    (np.deg2rad(-85.0), np.deg2rad(85.0)))

    cfg = build_config({
        "scenario": {"rx_elements": 4, "tx_elements": 2, "num_targets": 1},
        "sweep": {"variable": "num_targets", "values": [1, 3]},
    })
    assert cfg.scenario_for(3).num_targets == 3
