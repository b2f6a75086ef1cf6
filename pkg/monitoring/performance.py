"""
⚡ Pipeline Performance & Training Metrics
==========================================
Collects training-loop metrics, stage durations and validity-scan results,
aggregates them for summaries, raises log alerts on thresholds and writes the
training log CSV.
"""

import logging
import math
import statistics
import threading
import time
from collections import defaultdict, deque
from contextlib import contextmanager
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import pandas as pd

logger = logging.getLogger(__name__)

TRAINING_LOG_COLUMNS = ["iteration", "loss", "lr"]

class MetricType(Enum):
    """Enumeration for the pipeline metrics."""
    TRAINING_LOSS = "training_loss"
    LEARNING_RATE = "learning_rate"
    STAGE_DURATION = "stage_duration"
    VALIDITY_FAILURE_RATE = "validity_failure_rate"
    PSD_VIOLATION_RATE = "psd_violation_rate"

@dataclass
class PerformanceMetric:
    """Represents a single metric observation."""
    metric_type: MetricType
    value: float
    timestamp: datetime
    tags: Dict[str, str] # e.g., {"stage": "train"} or {"iteration": "100"}
    unit: str = ""

class PerformanceTracker:
    """
    Centralized tracker for pipeline metrics.
    Keeps a bounded buffer of observations, per-key aggregates for summaries
    and the (iteration, loss, lr) rows of the training log.
    """
    def __init__(self, metrics_buffer_size: int = 10000, mirror_path: bool = True):
        """
        Args:
            metrics_buffer_size (int): Size of the in-memory metric buffer.
            mirror_path (bool): whether validity failures are unexpected (mirror decoding) or
                the quantity under study (no-mirror baseline).
        """
        self.metrics_buffer = deque(maxlen=metrics_buffer_size)
        self.metrics_lock = threading.Lock()
        self.aggregated_metrics: Dict[str, List[float]] = defaultdict(list)
        self.training_rows: List[Dict[str, float]] = []

        self.alert_thresholds = {
            MetricType.VALIDITY_FAILURE_RATE: {"warning": 0.0, "critical": 0.01},
        }
        if not mirror_path:
            self.alert_thresholds = {}
        logger.debug("PerformanceTracker initialized.")

    def log_metric(self, metric_type: MetricType, value: float, tags: Optional[Dict[str, str]] = None, unit: str = ""):
        """
        Logs a single metric observation.

        Args:
            metric_type (MetricType): The type of metric.
            value (float): The metric value.
            tags (Optional[Dict[str, str]]): Optional tags for categorization.
            unit (str): Unit label.
        """
        metric = PerformanceMetric(
            metric_type=metric_type,
            value=value,
            timestamp=datetime.now(timezone.utc),
            tags=tags or {},
            unit=unit,
        )
        key = f"{metric_type.value}_" + "_".join(f"{k}={v}" for k, v in sorted((tags or {}).items()))
        with self.metrics_lock:
            self.metrics_buffer.append(metric)
            self.aggregated_metrics[key.rstrip("_")].append(value)

        self._check_alerts(metric)

    def log_training_step(self, iteration: int, loss: float, lr: float):
        """Records one training-log row (loss and learning rate at `iteration`)."""
        self.log_metric(MetricType.TRAINING_LOSS, loss)
        self.log_metric(MetricType.LEARNING_RATE, lr)
        with self.metrics_lock:
            self.training_rows.append({"iteration": int(iteration), "loss": float(loss), "lr": float(lr)})

    def log_stage_duration(self, stage: str, seconds: float):
        self.log_metric(MetricType.STAGE_DURATION, seconds, tags={"stage": stage}, unit="seconds")

    def log_validity(self, summary: Dict[str, Any], stage: str = "sample"):
        """Records the failure and PSD-violation rates of a validity scan summary."""
        count = summary.get("count", 0)
        if not count:
            return
        failure_rate = 1.0 - summary["passed"] / count
        self.log_metric(MetricType.VALIDITY_FAILURE_RATE, failure_rate, tags={"stage": stage})
        self.log_metric(MetricType.PSD_VIOLATION_RATE, summary.get("psd_violation_rate", 0.0), tags={"stage": stage})

    @contextmanager
    def track_stage(self, stage: str):
        """Times the enclosed block and logs it as a stage duration."""
        start = time.perf_counter()
        try:
            yield
        finally:
            self.log_stage_duration(stage, time.perf_counter() - start)

    def _check_alerts(self, metric: PerformanceMetric):
        """Checks a metric against the alert thresholds; non-finite losses are always critical."""
        if metric.metric_type is MetricType.TRAINING_LOSS and not math.isfinite(metric.value):
            logger.critical(f"🚨 CRITICAL ALERT: training loss is {metric.value}")
            return

        threshold_config = self.alert_thresholds.get(metric.metric_type)
        if not threshold_config:
            return
        if metric.value > threshold_config["critical"]:
            logger.critical(f"🚨 CRITICAL ALERT: {metric.metric_type.value} = {metric.value:.4f} exceeded critical threshold ({threshold_config['critical']}). Tags: {metric.tags}")
        elif metric.value > threshold_config["warning"]:
            logger.warning(f"⚠️ WARNING: {metric.metric_type.value} = {metric.value:.4f} exceeded warning threshold ({threshold_config['warning']}). Tags: {metric.tags}")

    def get_current_metrics(self) -> Dict[str, Any]:
        """
        Aggregated view of every metric key.

        Returns:
            Dict[str, Any]: count/avg/min/max/last per key.
        """
        snapshot = {}
        with self.metrics_lock:
            for key, values in self.aggregated_metrics.items():
                finite = [v for v in values if math.isfinite(v)]
                if not finite:
                    snapshot[key] = {"count": len(values), "avg": None, "min": None, "max": None, "last": values[-1] if values else None}
                    continue
                snapshot[key] = {
                    "count": len(values),
                    "avg": round(statistics.mean(finite), 6),
                    "min": round(min(finite), 6),
                    "max": round(max(finite), 6),
                    "last": values[-1],
                }
        return snapshot

    def log_summary(self, command: str) -> Dict[str, Any]:
        """Logs the aggregated metrics of a finished command, one line per key."""
        snapshot = self.get_current_metrics()
        for key, stats in sorted(snapshot.items()):
            logger.info(f"📊 {command} {key}: {stats}")
        return snapshot

    def training_log_frame(self) -> pd.DataFrame:
        with self.metrics_lock:
            return pd.DataFrame(self.training_rows, columns=TRAINING_LOG_COLUMNS)

    def flush_training_log(self, path: Union[str, Path]) -> Path:
        """
        Writes the training log rows as CSV (iteration, loss, lr).

        Args:
            path (Union[str, Path]): output CSV path.
        """
        path = Path(path)
        frame = self.training_log_frame()
        frame.to_csv(path, index=False, float_format="%.17g")
        logger.info(f"Flushed {len(frame)} training log rows to '{path}'.")
        return path
