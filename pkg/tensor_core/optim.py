"""
tensor_core/optim.py
Adam with bias correction, global-norm gradient clipping, and the
inverse-square-root warm-up learning-rate schedule.
"""
import math
from dataclasses import dataclass, field
from typing import Literal, Mapping, Optional

import numpy as np

from tensor_core.errors import InvalidInputError, NonFiniteError
from tensor_core.tensor import Tensor

ScheduleKind = Literal["inverse_sqrt_warmup", "constant"]


@dataclass
class OptimizerState:
    """Adam moments, one accumulator pair per named parameter."""
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    beta1: float = 0.9
    beta2: float = 0.998
    epsilon: float = 1e-8

    @classmethod
    def for_params(cls, params: Mapping[str, Tensor], **hyper) -> "OptimizerState":
        state = cls(**hyper)
        for name, p in params.items():
            state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        return state


@dataclass(frozen=True)
class LrSchedule:
    peak_lr: float = 5e-4
    warmup_steps: int = 5000
    kind: ScheduleKind = "inverse_sqrt_warmup"

    def __post_init__(self) -> None:
        if self.peak_lr <= 0:
            raise InvalidInputError(f"peak_lr must be positive, got {self.peak_lr}")
        if self.warmup_steps < 1:
            raise InvalidInputError(f"warmup_steps must be >= 1, got {self.warmup_steps}")
        if self.kind not in ("inverse_sqrt_warmup", "constant"):
            raise InvalidInputError(f"unknown schedule kind {self.kind!r}")


def lr_at(schedule: LrSchedule, step: int) -> float:
    """
    Learning rate for 1-based `step`.

    inverse_sqrt_warmup: peak_lr * min(s / warmup, sqrt(warmup / s)),
    linear up to the peak at s = warmup, then decaying as 1/sqrt(s).
    """
    if step < 1:
        raise InvalidInputError(f"lr_at needs step >= 1, got {step}")
    if schedule.kind == "constant":
        return schedule.peak_lr
    w = schedule.warmup_steps
    return schedule.peak_lr * min(step / w, math.sqrt(w / step))


def global_grad_norm(grads: Mapping[str, np.ndarray]) -> float:
    return math.sqrt(sum(float(np.sum(np.square(g, dtype=np.float64))) for g in grads.values()))


def clip_grad_norm(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Scale all gradients so their joint L2 norm is at most `max_norm`. Returns the pre-clip norm."""
    norm = global_grad_norm(grads)
    if max_norm > 0 and norm > max_norm:
        scale = max_norm / (norm + 1e-12)
        for name in grads:
            grads[name] = grads[name] * np.asarray(scale, dtype=grads[name].dtype)
    return norm


def adam_step(
    params: Mapping[str, Tensor],
    grads: Mapping[str, Optional[np.ndarray]],
    state: OptimizerState,
    lr: float,
) -> OptimizerState:
    """
    One bias-corrected Adam update, applied in place to `params`.

    Raises NonFiniteError (and leaves params and state untouched) when any
    gradient holds NaN/Inf; the caller decides whether to skip or abort.
    """
    if lr <= 0:
        raise InvalidInputError(f"lr must be positive, got {lr}")
    for name, g in grads.items():
        if g is None:
            continue
        if name not in params:
            raise InvalidInputError(f"gradient for unknown parameter {name!r}")
        if g.shape != params[name].shape:
            raise InvalidInputError(f"gradient shape {g.shape} != parameter shape {params[name].shape} for {name!r}")
        if not np.all(np.isfinite(g)):
            raise NonFiniteError(f"non-finite gradient for {name!r}")

    state.step += 1
    b1, b2, eps, t = state.beta1, state.beta2, state.epsilon, state.step
    correction1 = 1.0 - b1 ** t
    correction2 = 1.0 - b2 ** t
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            continue
        if name not in state.m:
            state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        m = state.m[name] = b1 * state.m[name] + (1.0 - b1) * g
        v = state.v[name] = b2 * state.v[name] + (1.0 - b2) * g * g
        update = lr * (m / correction1) / (np.sqrt(v / correction2) + eps)
        p.data = (p.data - update).astype(p.dtype)
    return state
