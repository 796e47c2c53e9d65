"""
tensor_core/gradcheck.py
Central finite-difference verification of autodiff gradients.
"""
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from monitoring import get_logger
from tensor_core.errors import InvalidInputError
from tensor_core.tensor import Tensor, backward, no_grad

log = get_logger(__name__)

MAX_ENTRIES_PER_TENSOR = 64
REL_ERROR_FLOOR = 1e-3


@dataclass
class GradCheckReport:
    max_rel_error: float = 0.0
    worst_parameter: str = ""
    checked_entries: int = 0
    per_parameter: dict[str, float] = field(default_factory=dict)


def relative_error(analytic: float, numeric: float) -> float:
    """|a - n| / max(|a|, |n|, floor); defined as 0 when both are 0."""
    if analytic == 0.0 and numeric == 0.0:
        return 0.0
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), REL_ERROR_FLOOR)


def grad_check_report(
    build_loss: Callable[[], Tensor],
    params: Mapping[str, Tensor],
    eps: float = 1e-5,
    max_entries: int = MAX_ENTRIES_PER_TENSOR,
    seed: int = 0,
) -> GradCheckReport:
    if eps <= 0:
        raise InvalidInputError(f"eps must be positive, got {eps}")
    rng = np.random.default_rng(seed)

    for p in params.values():
        p.zero_grad()
    backward(build_loss())

    report = GradCheckReport()
    for name, p in params.items():
        analytic = p.grad if p.grad is not None else np.zeros_like(p.data)
        count = min(max_entries, p.size)
        picks = rng.choice(p.size, size=count, replace=False)
        worst = 0.0
        flat = p.data.reshape(-1)
        for i in picks:
            original = flat[i]
            step = eps * (1.0 + abs(float(original)))
            with no_grad():
                flat[i] = original + step
                f_plus = build_loss().item()
                flat[i] = original - step
                f_minus = build_loss().item()
            flat[i] = original
            numeric = (f_plus - f_minus) / (2.0 * step)
            worst = max(worst, relative_error(float(analytic.reshape(-1)[i]), numeric))
        report.per_parameter[name] = worst
        report.checked_entries += count
        if worst >= report.max_rel_error:
            report.max_rel_error = worst
            report.worst_parameter = name

    log.info(
        "Gradient check complete",
        max_rel_error=report.max_rel_error,
        worst=report.worst_parameter,
        entries=report.checked_entries,
    )
    return report


def grad_check(
    build_loss: Callable[[], Tensor],
    params: Mapping[str, Tensor],
    eps: float = 1e-5,
) -> float:
    """Worst relative error between autodiff and central differences over sampled entries."""
    return grad_check_report(build_loss, params, eps).max_rel_error
