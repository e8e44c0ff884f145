"""Harness: configuration, runners, CSV emission, CLI."""

import json
import subprocess
import sys

import numpy as np
import pytest

from mfgmf.core import RngStream
from mfgmf.errors import ConfigError
from mfgmf.harness import (
    CSV_COLUMNS,
    ExperimentConfig,
    _banana_replicate,
    _lorenz96_replicate,
    emit_csv,
    make_lorenz96_truth,
    metadata_path,
    read_csv,
    run_banana,
    run_lorenz96,
    run_sweep,
    save_truth,
)


def test_config_rejects_unknown_fields():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"experiment": "banana", "bogus": 1})


def test_config_rejects_bad_values():
    with pytest.raises(ConfigError):
        ExperimentConfig(experiment="banana", filter="kalman9000")
    with pytest.raises(ConfigError):
        ExperimentConfig(experiment="lorenz96", filter="none", steps=10, spinup=10)
    with pytest.raises(ConfigError):
        ExperimentConfig(experiment="lorenz96", filter="mfengmf")  # needs rom_path


def test_desk_scale_defaults():
    banana = ExperimentConfig(experiment="banana", filter="engmf")
    assert banana.replicates == 1000
    l96 = ExperimentConfig(experiment="lorenz96", filter="none")
    assert (l96.replicates, l96.steps, l96.spinup) == (5, 600, 100)
    paper = ExperimentConfig(experiment="banana", filter="engmf", paper_scale=True)
    assert paper.replicates == 10008


def test_emit_csv_header_only(tmp_path):
    path = tmp_path / "empty.csv"
    emit_csv([], path)
    text = path.read_text()
    assert text.strip() == ",".join(CSV_COLUMNS)


def test_emit_csv_roundtrip(tmp_path):
    cfg = ExperimentConfig(experiment="banana", filter="engmf", n_x=5, replicates=2,
                           seed=10, workers=1)
    rows = run_banana(cfg)
    path = tmp_path / "out.csv"
    emit_csv(rows, path)
    parsed = read_csv(path)
    assert len(parsed) == len(rows)
    for row, record in zip(rows, parsed):
        assert record["filter"] == row.filter
        assert int(record["replicate"]) == row.replicate
        assert record["metric"] == row.metric
        if isinstance(row.value, float):
            assert float(record["value"]) == pytest.approx(row.value, rel=1e-15)
        else:
            assert record["value"] == row.value


def test_same_seed_byte_identical_apart_from_runtime(tmp_path):
    cfg = ExperimentConfig(experiment="banana", filter="aengmf", n_x=10, replicates=3,
                           seed=77, workers=1)
    paths = []
    for tag in ("a", "b"):
        rows = run_banana(cfg)
        path = tmp_path / f"{tag}.csv"
        emit_csv(rows, path)
        paths.append(path)

    def strip_runtime(path):
        lines = path.read_text().splitlines()
        drop = CSV_COLUMNS.index("runtime_seconds")
        return ["," .join(col for i, col in enumerate(line.split(",")) if i != drop)
                for line in lines]

    assert strip_runtime(paths[0]) == strip_runtime(paths[1])
    assert paths[0].read_bytes() != b""


def test_replicate_order_independence():
    cfg = ExperimentConfig(experiment="banana", filter="engmf", n_x=10, replicates=3,
                           seed=5, workers=1)
    individual = {rep: _banana_replicate(cfg, rep)[0].value for rep in (2, 0, 1)}
    batch = {row.replicate: row.value for row in run_banana(cfg)
             if row.metric == "f_divergence" and row.replicate >= 0}
    assert batch == {k: individual[k] for k in batch}


def test_workers_do_not_change_results():
    base = ExperimentConfig(experiment="banana", filter="engmf", n_x=10, replicates=4,
                            seed=6, workers=1)
    parallel = ExperimentConfig(experiment="banana", filter="engmf", n_x=10, replicates=4,
                                seed=6, workers=2)
    rows_a = [(r.replicate, r.metric, r.value) for r in run_banana(base)]
    rows_b = [(r.replicate, r.metric, r.value) for r in run_banana(parallel)]
    assert rows_a == rows_b


def test_aggregate_is_mean_of_replicates():
    cfg = ExperimentConfig(experiment="banana", filter="engmf", n_x=10, replicates=5,
                           seed=8, workers=1)
    rows = run_banana(cfg)
    values = [r.value for r in rows if r.metric == "f_divergence" and r.replicate >= 0]
    aggregate = next(r for r in rows if r.replicate == -1)
    assert aggregate.metric == "f_divergence_mean"
    assert aggregate.value == pytest.approx(float(np.mean(values)), abs=1e-12)


def test_truth_generation_deterministic_and_paired():
    a_truth, a_obs = make_lorenz96_truth(40, RngStream(3, 0))
    b_truth, b_obs = make_lorenz96_truth(40, RngStream(3, 0))
    assert np.array_equal(a_truth, b_truth)
    assert np.array_equal(a_obs, b_obs)
    c_truth, _ = make_lorenz96_truth(40, RngStream(4, 0))
    assert not np.allclose(a_truth[0], c_truth[0])


def test_truth_file_roundtrip(tmp_path):
    truth, obs = make_lorenz96_truth(30, RngStream(9, 0))
    path = tmp_path / "truth.npz"
    save_truth(path, truth, obs)
    cfg = ExperimentConfig(experiment="lorenz96", filter="enkf", n_x=10, alpha_x=1.1,
                           steps=30, spinup=5, replicates=1, seed=9, workers=1,
                           truth_path=str(path))
    rows = run_lorenz96(cfg)
    assert any(r.metric == "rmse" and isinstance(r.value, float) for r in rows)


def test_truth_file_too_short_rejected(tmp_path):
    truth, obs = make_lorenz96_truth(10, RngStream(9, 0))
    path = tmp_path / "short.npz"
    save_truth(path, truth, obs)
    cfg = ExperimentConfig(experiment="lorenz96", filter="enkf", n_x=10, steps=30,
                           spinup=5, replicates=1, seed=9, workers=1, truth_path=str(path))
    with pytest.raises(ConfigError):
        _lorenz96_replicate(cfg, 0)


def test_adaptive_rows_include_trust_trajectory(small_rom):
    cfg = ExperimentConfig(experiment="lorenz96", filter="amfengmf", n_x=6, n_u=10,
                           r_dim=14, steps=8, spinup=2, replicates=1, seed=11,
                           workers=1, rom_path=small_rom["path"])
    rows = run_lorenz96(cfg)
    trust = [r for r in rows if r.metric.startswith("s_x@")]
    assert len(trust) == 8
    assert all(isinstance(r.value, float) and r.value >= 0.05 for r in trust)


def test_sweep_single_point_matches_plain_run(small_rom):
    kwargs = dict(experiment="lorenz96", filter="enkf", n_x=8, alpha_x=1.05, steps=20,
                  spinup=4, replicates=2, seed=13, workers=1)
    plain = run_lorenz96(ExperimentConfig(**kwargs))
    swept, summary = run_sweep(ExperimentConfig(**kwargs, alpha_x_grid=[1.05]))
    assert [(r.replicate, r.metric, r.value) for r in plain] == \
           [(r.replicate, r.metric, r.value) for r in swept]
    assert summary["argmin_by_n_x"]["8"]["alpha_x"] == 1.05


def test_enkf_inflation_sweep_mechanics():
    # all grid points must filter well below the free-forecast level and the
    # argmin must be reported; the published preference for alpha=1.1 does not
    # reproduce here (this implementation's EnKF prefers 1.0 by ~0.3 RMSE at
    # both desk and paper scale; see the decisions ledger)
    cfg = ExperimentConfig(experiment="lorenz96", filter="enkf", n_x=25, steps=200,
                           spinup=50, replicates=3, seed=17, workers=2,
                           alpha_x_grid=[1.0, 1.05, 1.1])
    rows, summary = run_sweep(cfg)
    aggregates = [r for r in rows if r.replicate == -1]
    assert len(aggregates) == 3
    assert all(isinstance(r.value, float) and r.value < 3.6 for r in aggregates)
    best = summary["argmin_by_n_x"]["25"]
    assert best["alpha_x"] in (1.0, 1.05, 1.1)
    assert best["mean"] == min(r.value for r in aggregates)


def _cli(*args):
    return subprocess.run([sys.executable, "-m", "mfgmf.cli", *args],
                          capture_output=True, text=True)


def test_cli_banana_run_and_metadata(tmp_path):
    out = tmp_path / "banana.csv"
    result = _cli("banana", "--filter", "engmf", "--n-x", "8", "--replicates", "2",
                  "--seed", "3", "--workers", "1", "--out", str(out))
    assert result.returncode == 0, result.stderr
    assert out.exists()
    meta = json.loads((tmp_path / "banana.meta.json").read_text())
    assert meta["config"]["filter"] == "engmf"
    assert meta["config"]["n_x"] == 8
    assert "kernel_implementation" in meta


def test_cli_config_file_with_flag_override(tmp_path):
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({"filter": "engmf", "n_x": 8, "replicates": 2,
                                  "seed": 3, "workers": 1}))
    out = tmp_path / "run.csv"
    result = _cli("banana", "--config", str(config), "--n-x", "5", "--out", str(out))
    assert result.returncode == 0, result.stderr
    meta = json.loads((tmp_path / "run.meta.json").read_text())
    assert meta["config"]["n_x"] == 5  # flag wins over file


def test_cli_exit_codes(tmp_path):
    assert _cli("banana", "--filter", "nosuch", "--out", str(tmp_path / "x.csv")).returncode == 2
    assert _cli("banana", "--filter", "engmf", "--replicates", "1").returncode == 2  # no --out
    missing_rom = _cli("l96", "--filter", "mfengmf", "--rom-path", str(tmp_path / "no.json"),
                       "--steps", "5", "--spinup", "1", "--replicates", "1",
                       "--out", str(tmp_path / "y.csv"))
    assert missing_rom.returncode == 4  # unreadable rom file -> I/O failure
    bad_json = tmp_path / "rom.json"
    bad_json.write_text("{\"format_version\": 99}")
    bad_rom = _cli("l96", "--filter", "mfengmf", "--rom-path", str(bad_json),
                   "--steps", "5", "--spinup", "1", "--replicates", "1",
                   "--out", str(tmp_path / "z.csv"))
    assert bad_rom.returncode == 2  # version mismatch -> configuration error


def test_cli_make_truth_and_l96(tmp_path):
    truth_path = tmp_path / "truth.npz"
    made = _cli("make-truth", "--steps", "25", "--seed", "4", "--out", str(truth_path))
    assert made.returncode == 0, made.stderr
    out = tmp_path / "l96.csv"
    ran = _cli("l96", "--filter", "enkf", "--n-x", "8", "--alpha-x", "1.1",
               "--steps", "25", "--spinup", "5", "--replicates", "1", "--seed", "4",
               "--workers", "1", "--truth-path", str(truth_path), "--out", str(out))
    assert ran.returncode == 0, ran.stderr
    records = read_csv(out)
    assert any(r["metric"] == "rmse" for r in records)


def test_density_dump_structure(tmp_path):
    dump = tmp_path / "dump.json"
    cfg = ExperimentConfig(experiment="banana", filter="engmf", n_x=10, n_u=30,
                           replicates=1, seed=12, workers=1,
                           dump_density=str(dump), dump_resolution=61)
    run_banana(cfg)
    doc = json.loads(dump.read_text())
    assert set(doc["filters"]) == {"enkf", "engmf", "mfenkf", "mfengmf"}
    assert doc["grid"]["nx"] == 61
    assert len(doc["log_true_posterior"]) == 61
    assert len(doc["filters"]["engmf"]["samples"]) == 10
    assert len(doc["filters"]["mfengmf"]["reduced_samples"]) == 30
    assert doc["obs_value"] == 1.0
