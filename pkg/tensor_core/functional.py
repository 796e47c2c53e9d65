"""
tensor_core/functional.py
Neural-network operations with hand-written backward rules:
softmax / log-softmax, sigmoid, GELU, dropout, RMS normalisation,
label-smoothed cross-entropy and KL divergence.
"""
from typing import Optional

import numpy as np

from tensor_core.errors import InvalidInputError, NonFiniteInputError
from tensor_core.tensor import ArrayLike, Tensor, lift, record

PROB_FLOOR = 1e-9
_GELU_C = float(np.sqrt(2.0 / np.pi))


def _check_finite(x: Tensor, op: str) -> None:
    if not np.all(np.isfinite(x.data)):
        raise NonFiniteInputError(f"{op}: input contains NaN or Inf")


def _distribution_tolerance(dtype: np.dtype) -> float:
    return 1e-6 if dtype == np.float64 else 1e-4


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """Numerically stable softmax along `axis` (max-subtraction)."""
    _check_finite(x, "softmax")
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def _backward(g: np.ndarray):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return record(out, (x,), _backward)


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    _check_finite(x, "log_softmax")
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))

    def _backward(g: np.ndarray):
        return (g - np.exp(out) * g.sum(axis=axis, keepdims=True),)

    return record(out, (x,), _backward)


def sigmoid(x: Tensor) -> Tensor:
    """Elementwise 1 / (1 + e^-x), evaluated without overflow for either sign."""
    z = np.exp(-np.abs(x.data))
    out = np.where(x.data >= 0, 1.0 / (1.0 + z), z / (1.0 + z)).astype(x.dtype)
    return record(out, (x,), lambda g: (g * out * (1.0 - out),))


def gelu(x: Tensor) -> Tensor:
    """GELU, tanh approximation."""
    a = x.data
    inner = _GELU_C * (a + 0.044715 * a ** 3)
    t = np.tanh(inner)
    out = 0.5 * a * (1.0 + t)

    def _backward(g: np.ndarray):
        d_inner = _GELU_C * (1.0 + 3 * 0.044715 * a * a)
        return (g * (0.5 * (1.0 + t) + 0.5 * a * (1.0 - t * t) * d_inner),)

    return record(out, (x,), _backward)


def relu(x: Tensor) -> Tensor:
    keep = x.data > 0
    return record(np.where(keep, x.data, 0).astype(x.dtype), (x,), lambda g: (g * keep,))


def dropout(x: Tensor, rate: float, rng: Optional[np.random.Generator], training: bool) -> Tensor:
    """Inverted dropout; the identity outside training or at rate 0."""
    if not training or rate <= 0.0 or rng is None:
        return x
    keep = (rng.random(x.shape) >= rate).astype(x.dtype) / (1.0 - rate)
    return x * keep


def rms_norm(x: Tensor, gain: Tensor, eps: float = 1e-6) -> Tensor:
    """x / sqrt(mean(x^2) + eps) * gain over the last axis."""
    scale = ((x * x).mean(axis=-1, keepdims=True) + eps) ** -0.5
    return x * scale * gain


def cross_entropy(
    logits: Tensor,
    targets: np.ndarray,
    label_smoothing: float = 0.0,
    pad_id: Optional[int] = 0,
) -> Tensor:
    """
    Mean label-smoothed negative log-likelihood over non-pad positions.

    logits: [..., V]; targets: integer ids with logits.shape[:-1].
    The smoothed target is (1 - eps) * onehot + eps / V.
    """
    if not 0.0 <= label_smoothing < 1.0:
        raise InvalidInputError(f"label_smoothing must be in [0, 1), got {label_smoothing}")
    _check_finite(logits, "cross_entropy")
    vocab = logits.shape[-1]
    flat_logits = logits.data.reshape(-1, vocab)
    flat_targets = np.asarray(targets).reshape(-1)
    if flat_targets.shape[0] != flat_logits.shape[0]:
        raise InvalidInputError(
            f"targets shape {np.shape(targets)} does not match logits {logits.shape}"
        )
    if flat_targets.size and (flat_targets.min() < 0 or flat_targets.max() >= vocab):
        raise InvalidInputError(f"target id outside [0, {vocab})")

    live = np.ones_like(flat_targets, dtype=bool) if pad_id is None else flat_targets != pad_id
    count = int(live.sum())
    if count == 0:
        raise InvalidInputError("cross_entropy: every target position is padding")

    shifted = flat_logits - flat_logits.max(axis=-1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    smoothed = np.full_like(log_probs, label_smoothing / vocab)
    smoothed[np.arange(flat_targets.shape[0]), flat_targets] += 1.0 - label_smoothing
    per_position = -(smoothed * log_probs).sum(axis=-1)
    loss = np.asarray(per_position[live].sum() / count, dtype=logits.dtype)

    def _backward(g: np.ndarray):
        grad = (np.exp(log_probs) - smoothed) * (live[:, None] / count)
        return ((grad * g).reshape(logits.shape).astype(logits.dtype),)

    return record(loss, (logits,), _backward)


def _check_distribution(x: np.ndarray, name: str) -> None:
    tol = _distribution_tolerance(x.dtype)
    if not np.all(np.isfinite(x)) or x.min(initial=0.0) < -tol:
        raise InvalidInputError(f"kl_divergence: {name} has negative or non-finite entries")
    sums = x.sum(axis=-1)
    if sums.size and np.max(np.abs(sums - 1.0)) > tol:
        raise InvalidInputError(
            f"kl_divergence: {name} rows must sum to 1 (worst row sums to {sums.flat[np.argmax(np.abs(sums - 1.0))]:.6f})"
        )


def kl_divergence(q: ArrayLike, p: Tensor, reduction: str = "sum") -> Tensor:
    """
    KL(q || p) along the last (class) axis; p floored at 1e-9 before the log.

    reduction: "none" -> one value per row, "sum" -> summed over rows,
    "mean" -> averaged over rows.
    """
    if reduction not in ("none", "sum", "mean"):
        raise InvalidInputError(f"unknown reduction {reduction!r}")
    q = lift(q, p)
    if q.shape != p.shape:
        raise InvalidInputError(f"kl_divergence shapes differ: {q.shape} vs {p.shape}")
    _check_distribution(q.data, "q")
    _check_distribution(p.data, "p")

    q_data = np.clip(q.data, 0.0, None)
    p_floor = np.maximum(p.data, PROB_FLOOR)
    with np.errstate(divide="ignore", invalid="ignore"):
        q_log_q = np.where(q_data > 0, q_data * np.log(np.where(q_data > 0, q_data, 1.0)), 0.0)
    per_row = (q_log_q - q_data * np.log(p_floor)).sum(axis=-1)
    rows = max(per_row.size, 1)
    if reduction == "sum":
        out = per_row.sum()
    elif reduction == "mean":
        out = per_row.sum() / rows
    else:
        out = per_row
    out = np.asarray(out, dtype=p.dtype)

    def _backward(g: np.ndarray):
        if reduction == "none":
            scale = g[..., None]
        elif reduction == "mean":
            scale = g / rows
        else:
            scale = g
        grad_p = np.where(p.data >= PROB_FLOOR, -q_data / p_floor, 0.0) * scale
        with np.errstate(divide="ignore"):
            log_q = np.log(np.where(q_data > 0, q_data, 1.0))
        grad_q = np.where(q_data > 0, log_q + 1.0 - np.log(p_floor), 0.0) * scale
        return grad_q.astype(q.dtype), grad_p.astype(p.dtype)

    return record(out, (q, p), _backward)
