import json

import pandas as pd
import pytest

import app.main as main_module
from app.errors import TruncationError
from app.main import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, execute, main, run_command
from app.settings import build_config, load_config


def _write(tmp_path, data) -> str:
    path = tmp_path / "run.json"
    path.write_text(json.dumps(data))
    return str(path)


def _small(command: str, tmp_path, **grids) -> dict:
    return {
        "command": command,
        "grids": {"drive": {"start": 0.0, "stop": 0.2, "step": 0.1}, **grids},
        "output": {"path": str(tmp_path / "out")},
    }


def test_no_command_prints_help(capsys):
    assert main([]) == EXIT_OK
    assert "orbital-floquet" in capsys.readouterr().out


def test_compare_methods_writes_table_and_sidecar(tmp_path):
    cfg = build_config(_small("compare-methods", tmp_path))
    data_path, meta_path = execute(cfg, threads=1)
    table = pd.read_csv(data_path)
    assert list(table.columns) == [
        "E1_GHz",
        "omega_R_sopt_GHz",
        "omega_R_monodromy_GHz",
        "omega_R_matrix_GHz",
        "omega_R_lz_GHz",
    ]
    assert len(table) == 3
    assert table["omega_R_lz_GHz"].isna().all()
    assert (table["omega_R_monodromy_GHz"] - table["omega_R_matrix_GHz"]).abs().max() < 1e-6
    assert load_config(meta_path).model_dump() == cfg.model_dump()


def test_json_output(tmp_path):
    data = _small("floquet-spectrum", tmp_path)
    data["output"]["format"] = "json"
    data_path, _ = execute(build_config(data), threads=1)
    records = json.loads(open(data_path, encoding="utf-8").read())
    assert {"E1_GHz", "frequency_GHz", "detuning_GHz", "weight_arb", "branch"} <= set(records[0])
    undriven = [r for r in records if r["E1_GHz"] == 0.0]
    assert min(abs(r["detuning_GHz"]) for r in undriven) < 1e-6


def test_ple_sweep_long_format(tmp_path):
    data = _small(
        "ple-sweep",
        tmp_path,
        detuning={"start": -0.1, "stop": 0.1, "step": 0.1},
        evolve_window=[0.0, 5.0],
        tolerance=1e-5,
    )
    data_path, _ = execute(build_config(data), threads=2)
    table = pd.read_csv(data_path)
    assert list(table.columns) == ["E1_GHz", "detuning_GHz", "pl_arb"]
    assert len(table) == 9
    assert (table["pl_arb"] >= 0).all()


def test_decoherence_rows(tmp_path):
    data = _small("decoherence", tmp_path)
    data["physics"] = {"n_samples": 4}
    table = pd.read_csv(execute(build_config(data), threads=1)[0])
    assert list(table.columns) == ["E1_GHz", "omega_R_GHz", "T2_Rabi_ns", "window_limited", "flagged"]
    assert bool(table.loc[0, "flagged"])


def test_rabi_time_rows(tmp_path):
    data = {
        "command": "rabi-time",
        "physics": {"n_samples": 1, "sigma": 0.0, "pulse_separation": 40.0},
        "grids": {
            "drive": {"start": 0.0, "stop": 0.0, "step": 1.0},
            "time_span": 30.0,
            "random_drive_phase": False,
            "tolerance": 1e-5,
        },
        "output": {"path": str(tmp_path / "out")},
    }
    table = pd.read_csv(execute(build_config(data), threads=1)[0])
    assert list(table.columns) == [
        "E1_GHz",
        "t_ns",
        "pl_arb",
        "residual_pct",
        "omega_R_fit_GHz",
        "T2_Rabi_ns",
        "f_peak_GHz",
    ]
    assert len(table) == 301
    for column in ("omega_R_fit_GHz", "T2_Rabi_ns", "f_peak_GHz"):
        assert table[column].nunique(dropna=False) == 1
    assert table["pl_arb"].max() == pytest.approx(1.0)


def test_cli_command_overrides_config(tmp_path):
    path = _write(tmp_path, _small("ple-sweep", tmp_path))
    assert main(["compare-methods", "--config", path, "--seed", "5"]) == EXIT_OK
    meta = json.loads((tmp_path / "out" / "compare_methods.meta.json").read_text())
    assert meta["command"] == "compare-methods"
    assert meta["seed"] == 5


def test_bad_config_exits_1(tmp_path, capsys):
    path = _write(tmp_path, {"physics": {"f_m": -1.0}})
    assert main(["compare-methods", "--config", path]) == EXIT_CONFIG
    record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert record["error"] == "ConfigError"
    assert record["exit_code"] == EXIT_CONFIG
    assert "f_m" in record["message"]


def test_numerical_failure_exits_2(tmp_path, capsys, monkeypatch):
    def boom(cfg, threads):
        raise TruncationError("Floquet basis too small", boundary_weight=1e-3)

    monkeypatch.setitem(main_module.RUNNERS, "compare-methods", boom)
    cfg = build_config(_small("compare-methods", tmp_path))
    assert run_command(cfg, threads=1) == EXIT_NUMERICAL
    record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert record == {"error": "TruncationError", "message": record["message"], "exit_code": EXIT_NUMERICAL}
    assert "boundary weight" in record["message"]


def test_check_config(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("OF_THREADS", "3")
    path = _write(tmp_path, {"command": "decoherence"})
    assert main(["check-config", "--config", path]) == EXIT_OK
    out = capsys.readouterr().out
    assert "== Config Check ==" in out
    assert "OF_THREADS: 3" in out
    assert "command: decoherence" in out
    assert '"n_samples": 500' in out
    assert not (tmp_path / "out").exists()


@pytest.mark.parametrize("command", ["decoherence", "ple-sweep"])
def test_output_identical_across_thread_counts(tmp_path, command):
    def run(threads: int) -> bytes:
        data = _small(
            command,
            tmp_path / str(threads),
            detuning={"start": -0.1, "stop": 0.1, "step": 0.1},
            evolve_window=[0.0, 5.0],
            tolerance=1e-5,
        )
        data["grids"]["drive"] = {"start": 2.0, "stop": 3.0, "step": 0.5}
        data["physics"] = {"n_samples": 3, "sigma": 0.03}
        data_path, _ = execute(build_config(data), threads=threads)
        with open(data_path, "rb") as f:
            return f.read()

    assert run(1) == run(3)
