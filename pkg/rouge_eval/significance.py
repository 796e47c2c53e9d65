"""
rouge_eval/significance.py
One-sided paired bootstrap: how often does system A fail to beat system B
when the evaluation set is resampled with replacement?
"""
from typing import Sequence

import numpy as np
from pydantic import BaseModel, Field

from tensor_core import InvalidInputError

DEFAULT_RESAMPLES = 1000


class SigReport(BaseModel):
    p_value:         float = Field(ge=0.0, le=1.0)
    resamples:       int
    mean_difference: float
    metric:          str = ""


def paired_significance(
    scores_a: Sequence[float],
    scores_b: Sequence[float],
    resamples: int = DEFAULT_RESAMPLES,
    seed: int = 0,
    metric: str = "",
) -> SigReport:
    """p = fraction of resamples where mean(A) <= mean(B)."""
    a = np.asarray(scores_a, dtype=np.float64)
    b = np.asarray(scores_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise InvalidInputError(f"score lists must be 1-D and equal length, got {a.shape} and {b.shape}")
    if a.size < 2:
        raise InvalidInputError(f"need at least 2 paired scores, got {a.size}")
    if resamples < 1:
        raise InvalidInputError(f"resamples must be positive, got {resamples}")

    diff = a - b
    idx = np.random.default_rng(seed).integers(0, diff.size, size=(resamples, diff.size))
    resampled = diff[idx].mean(axis=1)
    return SigReport(
        p_value=float(np.mean(resampled <= 0.0)),
        resamples=resamples,
        mean_difference=float(diff.mean()),
        metric=metric,
    )
