import json

import numpy as np
import pytest
import yaml

from heightscope.cli import main
from heightscope.config import config_from_dict
from heightscope.sweep import (
    CSV_HEADER,
    SweepContext,
    emit,
    format_csv,
    format_json,
    run_sweep,
)

FAST_RAW = {
    "trajectory": {"start": 160.0, "end": 144.0, "interval": 8.0,
                   "step": 2.0},
    "height_grid": {"min": 0.0, "max": 1.5, "step": 0.1},
    "rho_grid": [-0.3, -0.7],
    "snr_db": [0.0],
    "trials": 2,
    "methods": ["gs", "music"],
    "gamma": 0.02,
    "gamma_azimuth": 0.0,
    "seed": 11,
}


@pytest.fixture(scope="module")
def fast_rows():
    return run_sweep(config_from_dict(FAST_RAW), jobs=1)


def test_sweep_row_layout(fast_rows):
    assert [r.method for r in fast_rows] == ["gs", "music"]
    for r in fast_rows:
        assert 0.0 <= r.pd <= 1.0
        assert 0.0 <= r.far <= 1.0
        assert r.de == pytest.approx(r.pd * (1.0 - r.far), abs=1e-4)
        assert r.trials == 2
        assert r.wall_time_s == 0.0  # timing off by default


def test_csv_and_json_agree(fast_rows):
    cfg = config_from_dict(FAST_RAW)
    csv_text = format_csv(fast_rows)
    lines = csv_text.strip().split("\n")
    assert lines[0] == CSV_HEADER
    assert len(lines) == 1 + len(fast_rows)
    payload = json.loads(format_json(fast_rows, cfg))
    assert payload["config"]["seed"] == 11
    for row, rec in zip(fast_rows, payload["results"]):
        assert rec["pd"] == row.pd and rec["far"] == row.far


def test_emit_writes_files(fast_rows, tmp_path):
    cfg = config_from_dict(FAST_RAW)
    written = emit(fast_rows, cfg, "both", tmp_path / "out")
    names = sorted(p.name for p in written)
    assert names == ["results.csv", "results.json"]
    with pytest.raises(ValueError):
        emit([], cfg, "csv", tmp_path)
    with pytest.raises(ValueError):
        emit(fast_rows, cfg, "parquet", tmp_path)


def test_sweep_is_worker_count_invariant(fast_rows):
    rows2 = run_sweep(config_from_dict(FAST_RAW), jobs=2)
    cfg = config_from_dict(FAST_RAW)
    assert format_csv(fast_rows) == format_csv(rows2)
    assert format_json(fast_rows, cfg) == format_json(rows2, cfg)


def test_context_calibrates_with_fixed_gamma():
    ctx = SweepContext(config_from_dict(FAST_RAW))
    assert ctx.calibrate_gamma(0.0, "gs") == pytest.approx(0.02)
    assert ctx.calibrate_gamma_azimuth(0.0, "gs") == pytest.approx(0.0)


def test_cli_run_and_presets(tmp_path):
    cfg_path = tmp_path / "scenario.yaml"
    cfg_path.write_text(yaml.safe_dump(FAST_RAW))
    out_dir = tmp_path / "results"
    code = main(["run", "--config", str(cfg_path), "--jobs", "1",
                 "--out", str(out_dir), "--format", "csv"])
    assert code == 0
    assert (out_dir / "results.csv").read_text().startswith(CSV_HEADER)

    import contextlib
    import io
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        assert main(["presets"]) == 0
    out = buf.getvalue()
    assert "bumper_6x8" in out and "roof_3x4" in out


def test_cli_calibrate_gamma(tmp_path):
    raw = dict(FAST_RAW, gamma="auto", gamma_trials=2, methods=["gs"])
    cfg_path = tmp_path / "scenario.yaml"
    cfg_path.write_text(yaml.safe_dump(raw))
    side = tmp_path / "gamma.json"
    assert main(["calibrate-gamma", "--config", str(cfg_path),
                 "--out", str(side)]) == 0
    payload = json.loads(side.read_text())
    assert payload["gs@0dB"]["gamma"] > 0.0


def test_cli_config_error_exit_code(tmp_path):
    cfg_path = tmp_path / "bad.yaml"
    cfg_path.write_text("methods: [esprit]\n")
    assert main(["run", "--config", str(cfg_path)]) == 2
    assert main(["run", "--config", str(tmp_path / "none.yaml")]) == 2
