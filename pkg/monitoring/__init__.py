"""monitoring package"""
from .logger import (
    CHECKPOINTS,
    EVAL_ROUGE,
    LOSS_GAUGE,
    STEP_LATENCY,
    TRAIN_STEPS,
    configure_logging,
    get_logger,
    metrics,
    registry,
    timed,
    write_metrics_file,
)

__all__ = [
    "get_logger", "configure_logging", "metrics", "registry", "timed", "write_metrics_file",
    "TRAIN_STEPS", "STEP_LATENCY", "LOSS_GAUGE", "EVAL_ROUGE", "CHECKPOINTS",
]
