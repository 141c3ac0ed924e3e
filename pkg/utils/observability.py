"""
Structured Logging and Metrics for the DICING toolchain
Provides correlation IDs, structured JSON logging on stderr and operation timing
used by the benchmark and self-test reports
"""

from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from enum import Enum
from functools import wraps
import logging
import sys
from threading import local
import time
import traceback
from typing import Any, Dict, Optional
import uuid

import structlog


class ComponentType(Enum):
    """System components for structured logging"""

    GF2X = "gf2x"
    KEY_SCHEDULE = "keyschedule"
    IV_SETUP = "ivsetup"
    ENGINE = "engine"
    VERIFICATION = "verification"
    RANDOMNESS = "randomness"
    BENCHMARK = "benchmark"
    CLI = "cli"


class OperationType(Enum):
    """Types of operations for metrics"""

    KEY_SETUP = "key_setup"
    IV_SETUP = "iv_setup"
    KEYSTREAM = "keystream"
    FILE_CIPHER = "file_cipher"
    VERIFICATION = "verification"
    STATISTICS = "statistics"
    BENCHMARK = "benchmark"


@dataclass
class LogContext:
    """Structured context for logging"""

    correlation_id: str = field(default_factory=lambda: str(uuid.uuid4()))
    command: Optional[str] = None
    mode: Optional[str] = None
    operation_type: Optional[OperationType] = None
    component: Optional[ComponentType] = None

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for structured logging"""
        return {
            k: v.value if isinstance(v, Enum) else v
            for k, v in asdict(self).items()
            if v is not None
        }


@dataclass
class PerformanceMetrics:
    """Performance tracking for operations"""

    operation_count: int = 0
    total_duration: float = 0.0
    success_count: int = 0
    error_count: int = 0
    min_duration: float = float("inf")
    avg_duration: float = 0.0
    success_rate: float = 0.0

    def record_success(self, duration: float):
        """Record a successful operation"""
        self.operation_count += 1
        self.success_count += 1
        self.total_duration += duration
        self.min_duration = min(self.min_duration, duration)
        self._update_averages()

    def record_error(self, duration: float):
        """Record a failed operation"""
        self.operation_count += 1
        self.error_count += 1
        self.total_duration += duration
        self._update_averages()

    def _update_averages(self):
        if self.operation_count > 0:
            self.avg_duration = self.total_duration / self.operation_count
            self.success_rate = self.success_count / self.operation_count


def configure_logging(level: str = "WARNING") -> None:
    """Route stdlib logging (and therefore structlog) to stderr at the given level

    stdout is reserved for keystream and report output.
    """
    root = logging.getLogger()
    numeric_level = getattr(logging, str(level).upper(), logging.WARNING)
    if not any(getattr(h, "_dicing_handler", False) for h in root.handlers):
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(message)s"))
        handler._dicing_handler = True  # type: ignore[attr-defined]
        root.addHandler(handler)
    root.setLevel(numeric_level)


# Operation context shared by every component logger on the current thread
_context_local = local()
_structlog_configured = False


def current_log_context() -> Optional[LogContext]:
    """The operation context of the current thread, if any"""
    return getattr(_context_local, "context", None)


def _add_context(logger, method_name, event_dict):  # noqa: ARG001
    """Add correlation ID and operation context to all log entries"""
    context = current_log_context()
    if context is not None:
        for key, value in context.to_dict().items():
            event_dict.setdefault(key, value)
    return event_dict


def _configure_structlog() -> None:
    global _structlog_configured
    if _structlog_configured:
        return

    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.TimeStamper(fmt="ISO"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            _add_context,
            structlog.processors.JSONRenderer(),
        ],
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )
    _structlog_configured = True


class StructuredLogger:
    """Structured logger with correlation IDs and context"""

    def __init__(self, component: ComponentType):
        self.component = component
        _configure_structlog()
        self.logger = structlog.get_logger(f"dicing.{component.value}").bind(
            component=component.value
        )

    def set_context(self, context: Optional[LogContext]):
        """Set logging context for current thread"""
        _context_local.context = context

    def debug(self, message: str, **kwargs):
        self.logger.debug(message, **kwargs)

    def info(self, message: str, **kwargs):
        self.logger.info(message, **kwargs)

    def warning(self, message: str, **kwargs):
        self.logger.warning(message, **kwargs)

    def error(self, message: str, error: Optional[Exception] = None, **kwargs):
        """Log error message with context and exception details"""
        if error:
            kwargs["error_type"] = type(error).__name__
            kwargs["error_message"] = str(error)
            kwargs["traceback"] = traceback.format_exc()
        self.logger.error(message, **kwargs)


class MetricsCollector:
    """Aggregates operation timings per operation name"""

    def __init__(self):
        self.metrics: Dict[str, PerformanceMetrics] = {}

    def record_operation(self, operation: str, duration: float, success: bool):
        """Record an operation's performance"""
        if operation not in self.metrics:
            self.metrics[operation] = PerformanceMetrics()

        if success:
            self.metrics[operation].record_success(duration)
        else:
            self.metrics[operation].record_error(duration)

    def get(self, operation: str) -> Optional[PerformanceMetrics]:
        return self.metrics.get(operation)

class ObservabilityManager:
    """Central manager for structured logging and metrics"""

    def __init__(self, enable_metrics: bool = True):
        self.enable_metrics = enable_metrics
        self.metrics = MetricsCollector()
        self._loggers: Dict[ComponentType, StructuredLogger] = {}

        # Seconds; slower one-shot setups are logged as warnings
        self.thresholds = {
            "keysetup_duration": 0.5,
            "ivsetup_duration": 0.5,
        }

    def get_logger(self, component: ComponentType) -> StructuredLogger:
        """Get structured logger for component"""
        if component not in self._loggers:
            self._loggers[component] = StructuredLogger(component)
        return self._loggers[component]

    @contextmanager
    def operation_context(
        self,
        operation_type: OperationType,
        component: ComponentType,
        operation_name: str,
        **context_kwargs,
    ):
        """Context manager for tracking operations with logging and metrics"""
        outer = current_log_context()
        context = LogContext(
            operation_type=operation_type,
            component=component,
            command=context_kwargs.pop("command", None),
            mode=context_kwargs.pop("mode", None),
        )
        if outer is not None:
            context.correlation_id = outer.correlation_id
            context.command = context.command or outer.command
            context.mode = context.mode or outer.mode
        logger = self.get_logger(component)
        logger.set_context(context)

        start_time = time.perf_counter()
        success = False

        try:
            logger.debug(
                f"Starting {operation_name}", operation=operation_name, **context_kwargs
            )
            yield context
            success = True

        except Exception as e:
            logger.error(
                f"Operation failed: {operation_name}", error=e, operation=operation_name
            )
            raise

        finally:
            duration = time.perf_counter() - start_time

            if success:
                logger.debug(
                    f"Completed {operation_name}",
                    operation=operation_name,
                    duration_ms=duration * 1000,
                    success=True,
                )

            if self.enable_metrics:
                self.metrics.record_operation(operation_name, duration, success)
                self._check_thresholds(operation_name, duration)

            logger.set_context(outer)

    def _check_thresholds(self, operation: str, duration: float):
        threshold = self.thresholds.get(f"{operation}_duration")
        if threshold is not None and duration > threshold:
            self.get_logger(ComponentType.BENCHMARK).warning(
                "Performance threshold exceeded",
                operation=operation,
                duration_s=round(duration, 4),
                threshold_s=threshold,
            )


# Global observability manager
_observability_manager = None


def get_observability_manager() -> ObservabilityManager:
    """Get global observability manager"""
    global _observability_manager
    if _observability_manager is None:
        _observability_manager = ObservabilityManager()
    return _observability_manager


def reset_observability_manager() -> None:
    """Discard the global manager (tests and repeated bench runs)"""
    global _observability_manager
    _observability_manager = None


def get_logger(component: ComponentType) -> StructuredLogger:
    """Quick access to structured logger"""
    return get_observability_manager().get_logger(component)


def timed_operation(
    operation_name: str, component: ComponentType, operation_type: OperationType
):
    """Decorator for automatic operation timing and logging"""

    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            obs = get_observability_manager()
            with obs.operation_context(operation_type, component, operation_name):
                return func(*args, **kwargs)

        return wrapper

    return decorator
