# monitoring/sentry_config.py

import logging
from contextlib import contextmanager
from typing import Any, Dict, Optional

import sentry_sdk
from sentry_sdk.integrations.logging import LoggingIntegration

logger = logging.getLogger(__name__)

class SentryManager:
    """
    Thin wrapper around the global Sentry SDK state for the pipeline CLI.
    Every method is a logged no-op until `initialize` has been called with a DSN,
    so commands run identically with or without error tracking.
    """
    _initialized = False
    _environment = None

    @classmethod
    def initialize(cls, environment: str, dsn: Optional[str] = None) -> bool:
        """
        Initializes the SDK with the logging integration when a DSN is given.

        Returns:
            bool: True when error tracking is active.
        """
        if cls._initialized:
            logger.warning("SentryManager already initialized. Skipping.")
            return True
        if not dsn:
            logger.debug("SENTRY_DSN not set. Error tracking is disabled.")
            return False

        sentry_sdk.init(
            dsn=dsn,
            environment=environment,
            integrations=[LoggingIntegration(level=logging.INFO, event_level=logging.ERROR)],
            traces_sample_rate=1.0 if environment == "production" else 0.1,
        )
        cls._environment = environment
        cls._initialized = True
        logger.info(f"✅ SentryManager initialized for environment: {environment}")
        return True

    @classmethod
    def is_active(cls) -> bool:
        return cls._initialized

    @staticmethod
    def capture_exception_with_context(
        exception: Exception,
        extra_context: Optional[Dict[str, Any]] = None,
        tags: Optional[Dict[str, str]] = None
    ):
        """
        Captures an exception with the command and resolved config attached.
        """
        if not SentryManager._initialized:
            logger.debug(f"Sentry not initialized; not capturing {type(exception).__name__}.")
            return

        with sentry_sdk.push_scope() as scope:
            if extra_context:
                for key, value in extra_context.items():
                    scope.set_extra(key, value)
            if tags:
                for key, value in tags.items():
                    scope.set_tag(key, value)
            sentry_sdk.capture_exception(exception)
        logger.debug(f"Captured {type(exception).__name__} to Sentry")

    @classmethod
    @contextmanager
    def start_transaction(cls, name: str, op: str = "pipeline"):
        """
        Context manager wrapping a pipeline command in a Sentry transaction.
        """
        if not cls._initialized:
            yield None
            return

        with sentry_sdk.start_transaction(name=name, op=op) as transaction:
            logger.debug(f"Started Sentry transaction: {name}")
            yield transaction
            logger.debug(f"Finished Sentry transaction: {name}")

    @staticmethod
    def add_breadcrumb(
        message: str,
        category: str = "pipeline",
        level: str = "info",
        data: Optional[Dict[str, Any]] = None
    ):
        """
        Records a pipeline stage (dataset written, training finished, ...) on the current scope.
        """
        if not SentryManager._initialized:
            logger.debug(f"Sentry not initialized. Breadcrumb would have been: {message}")
            return

        sentry_sdk.add_breadcrumb(message=message, category=category, level=level, data=data)
        logger.debug(f"Added breadcrumb: {message}")

    @staticmethod
    def set_tag(key: str, value: str):
        if not SentryManager._initialized:
            return
        sentry_sdk.set_tag(key, value)
        logger.debug(f"Set Sentry tag: {key}={value}")

    @classmethod
    def reset(cls):
        """Forgets initialization state (the SDK client itself is left as is)."""
        cls._initialized = False
        cls._environment = None
