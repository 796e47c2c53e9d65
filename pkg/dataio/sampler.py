"""
dataio/sampler.py
Temperature-smoothed language sampling for multilingual batches:
P(k) = count_k ** exponent / sum_j count_j ** exponent.
"""
from typing import Mapping, Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator

from tensor_core import InvalidInputError

DEFAULT_EXPONENT = 0.5


class SamplerSpec(BaseModel):
    counts:   dict[str, int]
    exponent: float = Field(default=DEFAULT_EXPONENT, gt=0.0)
    seed:     int = 0

    @field_validator("counts")
    @classmethod
    def _positive(cls, counts: dict[str, int]) -> dict[str, int]:
        if not counts:
            raise ValueError("at least one language is required")
        bad = {k: v for k, v in counts.items() if v <= 0}
        if bad:
            raise ValueError(f"counts must be positive: {bad}")
        return counts


def language_probabilities(counts: Mapping[str, int], exponent: float = DEFAULT_EXPONENT) -> dict[str, float]:
    if not counts or any(c <= 0 for c in counts.values()):
        raise InvalidInputError(f"language counts must be positive, got {dict(counts)}")
    weights = np.array([float(c) ** exponent for c in counts.values()])
    probs = weights / weights.sum()
    return dict(zip(counts.keys(), probs.tolist()))


class LanguageSampler:
    """I.i.d. language draws; languages keep the insertion order of `counts`."""

    def __init__(self, spec: SamplerSpec, rng: Optional[np.random.Generator] = None) -> None:
        self.spec = spec
        self.probabilities = language_probabilities(spec.counts, spec.exponent)
        self._languages = list(self.probabilities)
        self._p = np.array([self.probabilities[k] for k in self._languages])
        self._rng = rng if rng is not None else np.random.default_rng(spec.seed)

    def draw(self) -> str:
        return self._languages[int(self._rng.choice(len(self._languages), p=self._p))]

    def draws(self, count: int) -> list[str]:
        idx = self._rng.choice(len(self._languages), size=count, p=self._p)
        return [self._languages[int(i)] for i in idx]

    def __iter__(self):
        while True:
            yield self.draw()


def language_sampler(spec: SamplerSpec, rng: Optional[np.random.Generator] = None) -> LanguageSampler:
    return LanguageSampler(spec, rng)
