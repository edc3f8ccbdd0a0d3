import json
from pathlib import Path

import numpy as np
import pytest

from app.errors import ConfigError
from app.settings import COMMANDS, build_config, load_config

CONFIG_DIR = Path(__file__).resolve().parent.parent / "config"


def test_defaults_resolve_from_spectroscopy():
    cfg = build_config({})
    assert cfg.command == "compare-methods"
    assert cfg.physics.V_E1 == pytest.approx(3.123, abs=1e-3)
    assert cfg.physics.V_E2 == pytest.approx(-0.721, abs=1e-3)
    assert cfg.physics.A1 == 0.0
    assert cfg.output.name == "compare_methods"
    statics = cfg.strain_drive()
    assert statics.V_E1 > 0
    assert statics.splitting == pytest.approx(6.41)


def test_default_drive_grid():
    drives = build_config({}).drive_values()
    assert drives.size == 71
    assert drives[0] == 0.0
    assert drives[-1] == pytest.approx(7.0)


@pytest.mark.parametrize(
    "command,sigma,n_samples,omega_lx",
    [("decoherence", 0.035, 500, 0.22), ("rabi-time", 0.030, 50, 0.22), ("ple-sweep", 0.0, 1, 0.05)],
)
def test_command_defaults(command, sigma, n_samples, omega_lx):
    p = build_config({"command": command}).physics
    assert p.sigma == sigma
    assert p.n_samples == n_samples
    assert p.omega_lx == omega_lx


def test_explicit_values_beat_command_defaults():
    cfg = build_config({"command": "decoherence", "physics": {"sigma": 0.01}})
    assert cfg.physics.sigma == 0.01
    assert cfg.noise().sigma == 0.01


def test_drive_sets_a1_from_ratio():
    cfg = build_config({"physics": {"E1": 1.4, "a1_ratio": -0.7}})
    assert cfg.physics.A1 == pytest.approx(-2.0)
    assert cfg.strain_drive(0.7).A1 == pytest.approx(-1.0)


def test_swept_drive_matches_configured_drive_for_negative_v_e1():
    cfg = build_config({"physics": {"V_E1": -3.13, "V_E2": 0.72}})
    base = cfg.strain_drive(0.0)
    assert base.relabeled
    for e1 in (1.0, 4.16):
        assert base.with_drive(e1, cfg.physics.a1_ratio) == cfg.strain_drive(e1)


def test_f_m_must_be_positive():
    with pytest.raises(ConfigError, match="physics.f_m"):
        build_config({"physics": {"f_m": 0.0}})


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="physics.V_E3"):
        build_config({"physics": {"V_E3": 1.0}})


def test_statics_given_together():
    with pytest.raises(ConfigError, match="together"):
        build_config({"physics": {"V_E1": 3.0}})


def test_top_level_must_be_mapping():
    with pytest.raises(ConfigError):
        build_config([1, 2])


def test_drive_powers_need_calibration():
    with pytest.raises(ConfigError, match="power_calibration"):
        build_config({"grids": {"drive_powers_mw": [1.0]}})
    cfg = build_config({"physics": {"power_calibration": 2.0}, "grids": {"drive_powers_mw": [0.0, 4.0]}})
    np.testing.assert_allclose(cfg.drive_values(), [0.0, 4.0])


def test_overrides():
    cfg = build_config({"command": "ple-sweep", "seed": 3}, {"command": "decoherence", "seed": 11, "out": "runs"})
    assert cfg.command == "decoherence"
    assert cfg.seed == 11
    assert cfg.output_paths() == ("runs/decoherence.csv", "runs/decoherence.meta.json")
    assert build_config({"seed": 3}, {"seed": None}).seed == 3


def test_seed_range():
    with pytest.raises(ConfigError):
        build_config({"seed": -1})
    assert build_config({"seed": (1 << 64) - 1}).seed == (1 << 64) - 1


def test_yaml_error_has_position(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("physics:\n  f_m: [1.0,\n")
    with pytest.raises(ConfigError, match=r"bad\.yaml:\d+:\d+"):
        load_config(str(path))


def test_json_error_has_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"seed": 1,,}')
    with pytest.raises(ConfigError, match=r"bad\.json:1:\d+"):
        load_config(str(path))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(str(tmp_path / "nope.json"))


def test_empty_file_means_defaults(tmp_path):
    path = tmp_path / "empty.yaml"
    path.write_text("")
    assert load_config(str(path)).command == "compare-methods"


def test_dump_reloads_to_same_config(tmp_path):
    cfg = build_config({"command": "decoherence", "physics": {"E1": 2.0}, "seed": 7})
    path = tmp_path / "run.meta.json"
    path.write_text(cfg.dump_json())
    again = load_config(str(path))
    assert again.model_dump() == cfg.model_dump()
    assert json.loads(cfg.dump_json())["physics"]["V_E1"] == cfg.physics.V_E1


def test_time_grid():
    t = build_config({"grids": {"t_stop": 1.0, "t_step": 0.25}}).time_grid()
    np.testing.assert_allclose(t, [0.0, 0.25, 0.5, 0.75, 1.0])


@pytest.mark.parametrize("command", COMMANDS)
def test_shipped_configs_load(command):
    cfg = load_config(str(CONFIG_DIR / f"{command.replace('-', '_')}.yaml"))
    assert cfg.command == command


def test_shipped_decoherence_config_scales_splitting():
    cfg = load_config(str(CONFIG_DIR / "decoherence.yaml"))
    assert cfg.physics.delta_scale == pytest.approx(1.015)
