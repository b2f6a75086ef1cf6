"""
End-to-End Tests for the Pipeline CLI (`mirrorstate/main.py`)

Runs tiny gendata -> train -> sample -> eval pipelines in a temporary
directory and checks artifacts, determinism, resume, the mirror-space
consistency checks, the eval gate and exit codes.
"""
import json
from unittest.mock import patch

import numpy as np
import pandas as pd
import pytest

from mirrorstate.diffusion import load_checkpoint
from mirrorstate.main import EXIT_ERROR, EXIT_GATE, EXIT_OK, main
from mirrorstate.quantum import read_dataset
from monitoring import PerformanceTracker

SMALL_MODEL = [
    "--set", "arch.hidden_dim=8",
    "--set", "arch.residual_blocks=1",
    "--set", "arch.time_embed_dim=4",
    "--set", "arch.norm_groups=2",
    "--set", "train.batch_size=16",
    "--set", "train.log_every=1",
]
FAST_EVAL = ["--set", "eval.projections=16", "--set", "eval.mswd_iterations=3", "--set", "eval.mswd_restarts=2"]


def _gendata(path, seed=1, counts="4,4,4", extra=()):
    return main(["gendata", "--out", str(path), "--qubits", "2", "--counts", counts, "--seed", str(seed), "--haar", "qr", *extra])


def _train(data, out, iterations, extra=()):
    return main(["train", "--data", str(data), "--out", str(out), "--iterations", str(iterations), *SMALL_MODEL, *extra])


@pytest.fixture
def train_data(tmp_path):
    path = tmp_path / "train.qsd"
    assert _gendata(path) == EXIT_OK
    return path


# --- gendata ---
def test_gendata_writes_labeled_dataset_and_reports(tmp_path, capsys):
    path = tmp_path / "data.qsd"
    assert _gendata(path, counts="3,4,5") == EXIT_OK
    out = capsys.readouterr().out
    assert "Wrote 12 records" in out
    assert "pairwise: 4" in out
    assert "Validity scan: 12/12 passed" in out

    dataset = read_dataset(path)
    assert dataset.qubits == 2
    assert dataset.seed == 1
    assert "data.haar_method = qr" in dataset.generator_config


def test_gendata_is_deterministic(tmp_path):
    assert _gendata(tmp_path / "a.qsd") == EXIT_OK
    assert _gendata(tmp_path / "b.qsd") == EXIT_OK
    assert _gendata(tmp_path / "c.qsd", seed=2) == EXIT_OK
    assert (tmp_path / "a.qsd").read_bytes() == (tmp_path / "b.qsd").read_bytes()
    assert (tmp_path / "a.qsd").read_bytes() != (tmp_path / "c.qsd").read_bytes()


def test_gendata_rejects_invalid_class_specification(tmp_path):
    out = tmp_path / "odd.qsd"
    assert main(["gendata", "--out", str(out), "--qubits", "3", "--counts", "1,1,1", "--haar", "qr"]) == EXIT_ERROR
    assert not out.exists()
    assert main(["gendata", "--out", str(out), "--counts", "1,1"]) == EXIT_ERROR


def test_gendata_baseline(tmp_path):
    path = tmp_path / "baseline.qsd"
    assert _gendata(path, extra=["--baseline"]) == EXIT_OK
    dataset = read_dataset(path)
    assert len(dataset) == 12
    assert not dataset.validity().all_passed()


# --- train ---
def test_train_zero_iterations(train_data, tmp_path):
    checkpoint_path = tmp_path / "model.qck"
    assert _train(train_data, checkpoint_path, 0) == EXIT_OK
    checkpoint = load_checkpoint(checkpoint_path)
    assert checkpoint.iterations == 0
    assert checkpoint.final_loss == 0.0
    assert checkpoint.input_dim == 16
    assert checkpoint.mirror.enabled is True


def test_train_writes_checkpoint_and_training_log(train_data, tmp_path, capsys):
    checkpoint_path = tmp_path / "model.qck"
    assert _train(train_data, checkpoint_path, 3) == EXIT_OK
    assert "Trained 3 iterations in the dual space" in capsys.readouterr().out
    log = pd.read_csv(tmp_path / "model.qck.log.csv")
    assert log["iteration"].tolist() == [1, 2, 3]
    assert list(log.columns) == ["iteration", "loss", "lr"]


def test_train_logs_the_run_metrics_summary(train_data, tmp_path):
    with patch.object(PerformanceTracker, "log_summary", autospec=True, return_value={}) as mock_summary:
        assert _train(train_data, tmp_path / "model.qck", 2) == EXIT_OK
    mock_summary.assert_called_once()
    assert mock_summary.call_args.args[1] == "train"


def test_train_resume_matches_uninterrupted_run(train_data, tmp_path):
    assert _train(train_data, tmp_path / "full.qck", 4) == EXIT_OK
    assert _train(train_data, tmp_path / "half.qck", 2) == EXIT_OK
    assert main([
        "train", "--data", str(train_data), "--out", str(tmp_path / "resumed.qck"),
        "--iterations", "2", "--resume", str(tmp_path / "half.qck"),
    ]) == EXIT_OK

    full = load_checkpoint(tmp_path / "full.qck")
    resumed = load_checkpoint(tmp_path / "resumed.qck")
    assert resumed.iterations == 4
    np.testing.assert_array_equal(resumed.parameters, full.parameters)
    assert resumed.final_loss == full.final_loss


def test_train_rejects_isometric_mismatch(train_data, tmp_path):
    assert _train(train_data, tmp_path / "m.qck", 1, extra=["--set", "mirror.isometric_scaling=false"]) == EXIT_ERROR


def test_train_missing_dataset(tmp_path):
    assert _train(tmp_path / "nope.qsd", tmp_path / "m.qck", 1) == EXIT_ERROR


# --- sample ---
def test_sample_produces_valid_labeled_states(train_data, tmp_path, capsys):
    checkpoint_path = tmp_path / "model.qck"
    assert _train(train_data, checkpoint_path, 2) == EXIT_OK
    samples_path = tmp_path / "samples.qsd"
    assert main([
        "sample", "--checkpoint", str(checkpoint_path), "--out", str(samples_path),
        "--count", "20", "--steps", "10", "--label", "pairwise", "--guidance", "1.5", "--seed", "3",
    ]) == EXIT_OK
    assert "Validity: 20/20 passed" in capsys.readouterr().out

    samples = read_dataset(samples_path)
    assert len(samples) == 20
    assert samples.validity().all_passed()
    np.testing.assert_array_equal(samples.labels, np.tile([0.0, 1.0, 0.0], (20, 1)))
    assert "sample.guidance = 1.5" in samples.generator_config


def test_sample_is_deterministic_for_a_seed(train_data, tmp_path):
    checkpoint_path = tmp_path / "model.qck"
    assert _train(train_data, checkpoint_path, 1) == EXIT_OK
    for name in ("a.qsd", "b.qsd"):
        args = ["sample", "--checkpoint", str(checkpoint_path), "--out", str(tmp_path / name), "--count", "5", "--steps", "5"]
        assert main(args + ["--sampler", "ode", "--integrator", "rk4"]) == EXIT_OK
    assert (tmp_path / "a.qsd").read_bytes() == (tmp_path / "b.qsd").read_bytes()


def test_sample_rejects_mirror_space_mismatch(train_data, tmp_path):
    checkpoint_path = tmp_path / "model.qck"
    assert _train(train_data, checkpoint_path, 1) == EXIT_OK
    assert main([
        "sample", "--checkpoint", str(checkpoint_path), "--out", str(tmp_path / "s.qsd"), "--count", "2", "--no-mirror",
    ]) == EXIT_ERROR


def test_no_mirror_pipeline_reports_violation_rate(train_data, tmp_path, capsys):
    checkpoint_path = tmp_path / "primal.qck"
    assert _train(train_data, checkpoint_path, 1, extra=["--no-mirror"]) == EXIT_OK
    assert load_checkpoint(checkpoint_path).mirror.enabled is False
    assert main([
        "sample", "--checkpoint", str(checkpoint_path), "--out", str(tmp_path / "s.qsd"),
        "--count", "10", "--steps", "5", "--no-mirror",
    ]) == EXIT_OK
    assert "violation rate" in capsys.readouterr().out


def test_sample_rejects_invalid_label(train_data, tmp_path):
    checkpoint_path = tmp_path / "model.qck"
    assert _train(train_data, checkpoint_path, 0) == EXIT_OK
    assert main([
        "sample", "--checkpoint", str(checkpoint_path), "--out", str(tmp_path / "s.qsd"), "--label", "0.9,0.9,0",
    ]) == EXIT_ERROR


# --- eval ---
def test_eval_identical_datasets(train_data, tmp_path):
    report_path = tmp_path / "report.json"
    assert main([
        "eval", "--generated", str(train_data), "--reference", str(train_data), "--report", str(report_path), *FAST_EVAL,
    ]) == EXIT_OK
    report = json.loads(report_path.read_text())
    for metric in ("swd", "mswd", "w1", "energy_mmd", "negativity_w1"):
        assert report[metric] == pytest.approx(0.0, abs=1e-10)
    assert report["gate_failures"] == []
    observables = pd.read_csv(tmp_path / "report.csv")
    assert len(observables) == 12


def test_eval_gate_failure_exit_code(train_data, tmp_path):
    other = tmp_path / "other.qsd"
    assert _gendata(other, seed=9) == EXIT_OK
    report_path = tmp_path / "report.json"
    assert main([
        "eval", "--generated", str(other), "--reference", str(train_data), "--report", str(report_path),
        "--gate", "--set", "gate.swd=0.0", *FAST_EVAL,
    ]) == EXIT_GATE
    assert json.loads(report_path.read_text())["gate_failures"]


def test_eval_rejects_incompatible_datasets(train_data, tmp_path):
    small = tmp_path / "one_qubit.qsd"
    assert main(["gendata", "--out", str(small), "--qubits", "1", "--counts", "3,0,0", "--haar", "qr"]) == EXIT_OK
    assert main([
        "eval", "--generated", str(small), "--reference", str(train_data), "--report", str(tmp_path / "r.json"),
    ]) == EXIT_ERROR


def test_unknown_config_key_is_an_error(train_data, tmp_path):
    assert _train(train_data, tmp_path / "m.qck", 0, extra=["--set", "train.learning_rat=0.1"]) == EXIT_ERROR
    assert _train(train_data, tmp_path / "m.qck", 0, extra=["--set", "novalue"]) == EXIT_ERROR
