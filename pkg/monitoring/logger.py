"""
monitoring/logger.py
Structured logging, Prometheus training metrics, timing decorator.
"""
import functools
import logging
import time
from pathlib import Path
from typing import Any, Callable


def get_logger(name: str):
    """Return a structlog logger. Imports structlog on first call only."""
    import structlog
    return structlog.get_logger(name)


def configure_logging(level: str = "INFO") -> None:
    """Configure structlog once; later calls only adjust the level."""
    import structlog
    logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO), format="%(message)s")
    logging.getLogger().setLevel(getattr(logging, level.upper(), logging.INFO))
    if structlog.is_configured():
        return
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.format_exc_info,
            structlog.dev.ConsoleRenderer(),
        ],
        wrapper_class=structlog.stdlib.BoundLogger,
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )


def _ensure_configured() -> None:
    from config.settings import settings
    configure_logging(settings.log_level)


_ensure_configured()


# ── Prometheus metrics (created lazily on first access) ──────────────────────

_registry = None


def registry():
    """One registry per process; the default global registry is never touched."""
    global _registry
    if _registry is None:
        from prometheus_client import CollectorRegistry
        _registry = CollectorRegistry()
    return _registry


class _LazyMetric:
    """A labelled Prometheus metric that is registered on its first `labels` call."""

    def __init__(self, kind: str, name: str, description: str, labels: tuple[str, ...], **options: Any) -> None:
        self.kind = kind
        self.name = name
        self._description = description
        self._labels = labels
        self._options = options
        self._metric = None

    def labels(self, **values: str):
        if self._metric is None:
            import prometheus_client
            factory = getattr(prometheus_client, self.kind)
            self._metric = factory(self.name, self._description, self._labels,
                                   registry=registry(), **self._options)
        return self._metric.labels(**values)


LATENCY_BUCKETS = (0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 30.0)

TRAIN_STEPS  = _LazyMetric("Counter", "sovmas_train_steps_total", "Training steps by outcome", ("language", "status"))
STEP_LATENCY = _LazyMetric("Histogram", "sovmas_step_duration_seconds", "Wall time per timed stage", ("stage",),
                           buckets=LATENCY_BUCKETS)
LOSS_GAUGE   = _LazyMetric("Gauge", "sovmas_last_loss", "Most recent loss value", ("objective",))
EVAL_ROUGE   = _LazyMetric("Gauge", "sovmas_eval_rouge", "Most recent ROUGE F1 (percent)", ("language", "metric"))
CHECKPOINTS  = _LazyMetric("Counter", "sovmas_checkpoints_written_total", "Checkpoints written", ("kind",))

metrics = {
    "train_steps":  TRAIN_STEPS,
    "step_latency": STEP_LATENCY,
    "loss":         LOSS_GAUGE,
    "eval_rouge":   EVAL_ROUGE,
    "checkpoints":  CHECKPOINTS,
}


def write_metrics_file(path: Path) -> None:
    """Dump the registry in Prometheus text format (node-exporter textfile style)."""
    try:
        from prometheus_client import write_to_textfile
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        write_to_textfile(str(path), registry())
    except Exception as exc:
        get_logger("monitoring").warning("Could not write metrics file", path=str(path), error=str(exc))


def timed(label: str) -> Callable:
    """Record the wrapped call's wall time under `stage=label`."""
    def decorator(fn: Callable) -> Callable:
        @functools.wraps(fn)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            t0 = time.perf_counter()
            try:
                return fn(*args, **kwargs)
            finally:
                STEP_LATENCY.labels(stage=label).observe(time.perf_counter() - t0)
        return wrapper
    return decorator

