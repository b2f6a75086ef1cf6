"""Monitoring and observability module."""
from .sentry_config import SentryManager
from .performance import MetricType, PerformanceTracker

__all__ = ['SentryManager', 'MetricType', 'PerformanceTracker']
