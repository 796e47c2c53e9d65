"""
objectives/losses.py
Summary, Vis2Sum and masked-image losses and the joint objectives.
"""
from typing import Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from objectives.masking import MaskPlan
from tensor_core import InvalidInputError, Tensor, cross_entropy, kl_divergence

Scalar = Union[Tensor, float]


class LossWeights(BaseModel):
    """alpha weighs Vis2Sum, beta weighs MIM."""
    model_config = ConfigDict(frozen=True)

    alpha: float = Field(default=1.0, ge=0.0)
    beta:  float = Field(default=1.0, ge=0.0)


def loss_mas(log_probs: Tensor, targets: np.ndarray, label_smoothing: float = 0.1, pad_id: int = 0) -> Tensor:
    """Mean label-smoothed NLL over non-pad summary tokens."""
    return cross_entropy(log_probs, targets, label_smoothing=label_smoothing, pad_id=pad_id)


def loss_vis2sum(log_probs: Tensor, targets: np.ndarray, label_smoothing: float = 0.1, pad_id: int = 0) -> Tensor:
    return cross_entropy(log_probs, targets, label_smoothing=label_smoothing, pad_id=pad_id)


def mim_targets(q: np.ndarray, plan: MaskPlan) -> np.ndarray:
    """Detector distributions of the masked slots, row-major over (example, slot)."""
    rows, slots = np.nonzero(plan.masked)
    return np.asarray(q)[rows, slots]


def loss_mim(predicted: Tensor, targets: np.ndarray, plan: MaskPlan) -> Tensor:
    """Sum of KL(q || p) over masked regions, averaged over the batch."""
    if predicted.ndim != 2 or predicted.shape[0] != plan.count:
        raise InvalidInputError(
            f"prediction rows {predicted.shape[0] if predicted.ndim else 0} do not match "
            f"{plan.count} masked regions"
        )
    targets = np.asarray(targets)
    if targets.shape != predicted.shape:
        raise InvalidInputError(f"target shape {targets.shape} does not match predictions {predicted.shape}")
    batch_size = plan.masked.shape[0]
    return kl_divergence(targets, predicted, reduction="sum") * (1.0 / batch_size)


def _check_finite(name: str, value: Scalar) -> None:
    v = value.item() if isinstance(value, Tensor) else float(value)
    if not np.isfinite(v):
        raise InvalidInputError(f"{name} is not finite ({v})")


def joint_mono(l_mas: Scalar, l_v2s: Scalar, l_mim: Scalar, weights: LossWeights) -> Scalar:
    """J = L_MAS + alpha * L_Vis2Sum + beta * L_MIM."""
    for name, value in (("L_MAS", l_mas), ("L_Vis2Sum", l_v2s), ("L_MIM", l_mim)):
        _check_finite(name, value)
    return l_mas + l_v2s * weights.alpha + l_mim * weights.beta


def joint_multi(per_language: Sequence[Scalar]) -> Scalar:
    """Literal sum of per-language joint objectives."""
    values = list(per_language)
    if not values:
        raise InvalidInputError("joint_multi needs at least one language")
    total = values[0]
    for value in values[1:]:
        total = total + value
    return total
