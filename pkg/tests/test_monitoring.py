"""
Tests for Monitoring (`monitoring/`)

Verifies that the Sentry wrapper is a no-op without a DSN and forwards to
the SDK when initialized (SDK mocked), and that the performance tracker
aggregates metrics, raises alerts and writes the training log.
"""
import logging
import math
from unittest.mock import MagicMock, patch

import pandas as pd
import pytest

from monitoring import MetricType, PerformanceTracker, SentryManager


@pytest.fixture(autouse=True)
def reset_sentry():
    SentryManager.reset()
    yield
    SentryManager.reset()


# --- Sentry ---
def test_sentry_without_dsn_is_disabled():
    assert SentryManager.initialize("development", None) is False
    assert not SentryManager.is_active()
    with SentryManager.start_transaction("mirrorstate.train") as transaction:
        assert transaction is None
    SentryManager.capture_exception_with_context(ValueError("boom"))
    SentryManager.add_breadcrumb("noop")


@patch("monitoring.sentry_config.sentry_sdk")
def test_sentry_initializes_and_captures(mock_sdk):
    assert SentryManager.initialize("production", "https://key@sentry.example.com/1") is True
    mock_sdk.init.assert_called_once()
    assert mock_sdk.init.call_args.kwargs["environment"] == "production"
    assert mock_sdk.init.call_args.kwargs["traces_sample_rate"] == 1.0

    scope = MagicMock()
    mock_sdk.push_scope.return_value.__enter__.return_value = scope
    error = RuntimeError("sampler exploded")
    SentryManager.capture_exception_with_context(error, extra_context={"command": "sample"}, tags={"stage": "sample"})
    scope.set_extra.assert_called_once_with("command", "sample")
    scope.set_tag.assert_called_once_with("stage", "sample")
    mock_sdk.capture_exception.assert_called_once_with(error)

    SentryManager.add_breadcrumb("dataset written", data={"records": 3})
    mock_sdk.add_breadcrumb.assert_called_once()


@patch("monitoring.sentry_config.sentry_sdk")
def test_sentry_second_initialize_is_skipped(mock_sdk):
    SentryManager.initialize("staging", "https://key@sentry.example.com/1")
    SentryManager.initialize("staging", "https://key@sentry.example.com/1")
    assert mock_sdk.init.call_count == 1


# --- Performance Tracker ---
def test_tracker_aggregates_metrics():
    tracker = PerformanceTracker()
    for value in (1.0, 2.0, 3.0):
        tracker.log_metric(MetricType.STAGE_DURATION, value, tags={"stage": "train"}, unit="seconds")
    snapshot = tracker.get_current_metrics()
    stats = snapshot["stage_duration_stage=train"]
    assert stats["count"] == 3
    assert stats["avg"] == 2.0
    assert stats["min"] == 1.0 and stats["max"] == 3.0
    assert stats["last"] == 3.0


def test_tracker_training_log_csv(tmp_path):
    tracker = PerformanceTracker()
    tracker.log_training_step(100, 0.5, 1e-3)
    tracker.log_training_step(200, 0.25, 5e-4)
    path = tracker.flush_training_log(tmp_path / "train.log.csv")
    frame = pd.read_csv(path)
    assert list(frame.columns) == ["iteration", "loss", "lr"]
    assert frame["iteration"].tolist() == [100, 200]
    assert frame["loss"].tolist() == [0.5, 0.25]


def test_tracker_alerts_on_non_finite_loss(caplog):
    tracker = PerformanceTracker()
    with caplog.at_level(logging.CRITICAL):
        tracker.log_training_step(1, math.nan, 1e-3)
    assert "training loss is nan" in caplog.text


def test_validity_alerts_depend_on_mirror_path(caplog):
    summary = {"count": 10, "passed": 9, "psd_violation_rate": 0.1}
    with caplog.at_level(logging.WARNING):
        PerformanceTracker(mirror_path=True).log_validity(summary)
    assert "CRITICAL ALERT" in caplog.text

    caplog.clear()
    with caplog.at_level(logging.WARNING):
        PerformanceTracker(mirror_path=False).log_validity(summary)
    assert "ALERT" not in caplog.text


def test_track_stage_records_duration():
    tracker = PerformanceTracker()
    with tracker.track_stage("eval"):
        pass
    assert tracker.get_current_metrics()["stage_duration_stage=eval"]["count"] == 1


def test_log_summary_reports_every_metric_key(caplog):
    tracker = PerformanceTracker()
    tracker.log_training_step(1, 0.5, 1e-3)
    with tracker.track_stage("train"):
        pass
    with caplog.at_level(logging.INFO, logger="monitoring.performance"):
        snapshot = tracker.log_summary("train")
    assert "stage_duration_stage=train" in snapshot
    assert "📊 train stage_duration_stage=train" in caplog.text
    assert all(key in caplog.text for key in snapshot)
