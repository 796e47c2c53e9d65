"""
dataio/splits.py
Seeded train/validation/test splitting by resource tier.

mid-high and low tiers: 80/10/10 (validation and test floored, remainder to train).
zero tier: 100 few-shot examples, the rest halved between validation and test.
"""
import math
import zlib
from pathlib import Path
from typing import Literal, Mapping, Sequence, Union

import numpy as np
from pydantic import BaseModel, Field

from dataio.records import Corpus
from monitoring import get_logger
from tensor_core import InvalidInputError
from tensor_core.checkpoint import atomic_write_bytes

log = get_logger(__name__)

Tier = Literal["mid-high", "low", "zero"]
TIERS: tuple[str, ...] = ("mid-high", "low", "zero")

FEW_SHOT_SIZE = 100
DEFAULT_RATIOS = (0.8, 0.1, 0.1)


class CorpusSplit(BaseModel):
    train:      list[str] = Field(default_factory=list)
    validation: list[str] = Field(default_factory=list)
    test:       list[str] = Field(default_factory=list)
    few_shot:   list[str] = Field(default_factory=list)

    def sizes(self) -> dict[str, int]:
        return {k: len(v) for k, v in self.model_dump().items()}

    def merge(self, other: "CorpusSplit") -> "CorpusSplit":
        return CorpusSplit(
            train=self.train + other.train,
            validation=self.validation + other.validation,
            test=self.test + other.test,
            few_shot=self.few_shot + other.few_shot,
        )

    def save(self, path: Path) -> None:
        atomic_write_bytes(Path(path), self.model_dump_json(indent=2).encode("utf-8"))

    @classmethod
    def load(cls, path: Path) -> "CorpusSplit":
        path = Path(path)
        if not path.exists():
            raise InvalidInputError(f"split file not found: {path}")
        return cls.model_validate_json(path.read_text(encoding="utf-8"))


def _floor(count: int, ratio: float) -> int:
    return int(math.floor(count * ratio + 1e-9))


def split_ids(
    ids: Sequence[str],
    tier: str,
    seed: Union[int, Sequence[int]],
    ratios: tuple[float, float, float] = DEFAULT_RATIOS,
) -> CorpusSplit:
    if tier not in TIERS:
        raise InvalidInputError(f"unknown tier {tier!r}; expected one of {TIERS}")
    if any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise InvalidInputError(f"split ratios must be non-negative and sum to 1, got {ratios}")
    ids = list(ids)
    order = [ids[i] for i in np.random.default_rng(seed).permutation(len(ids))]

    if tier == "zero":
        if len(order) < FEW_SHOT_SIZE + 2:
            raise InvalidInputError(
                f"zero tier needs at least {FEW_SHOT_SIZE + 2} examples, got {len(order)}"
            )
        few, rest = order[:FEW_SHOT_SIZE], order[FEW_SHOT_SIZE:]
        half = len(rest) // 2
        return CorpusSplit(few_shot=few, validation=rest[:half], test=rest[half:])

    n_val = _floor(len(order), ratios[1])
    n_test = _floor(len(order), ratios[2])
    n_train = len(order) - n_val - n_test
    return CorpusSplit(
        train=order[:n_train],
        validation=order[n_train:n_train + n_val],
        test=order[n_train + n_val:],
    )


def _language_seed(seed: int, language: str) -> list[int]:
    return [seed, zlib.crc32(language.encode("utf-8"))]


def split_corpus(
    corpus: Corpus,
    tier: Union[str, Mapping[str, str]],
    seed: int = 0,
    ratios: Union[tuple[float, float, float], Mapping[str, tuple[float, float, float]]] = DEFAULT_RATIOS,
) -> CorpusSplit:
    """
    Split each language independently. `tier` and `ratios` are either one
    value for all languages or a per-language mapping.
    """
    result = CorpusSplit()
    for language, examples in corpus.by_language().items():
        lang_tier = tier.get(language, "mid-high") if isinstance(tier, Mapping) else tier
        lang_ratios = ratios.get(language, DEFAULT_RATIOS) if isinstance(ratios, Mapping) else ratios
        part = split_ids([ex.id for ex in examples], lang_tier, _language_seed(seed, language), lang_ratios)
        log.info("Language split", language=language, tier=lang_tier, **part.sizes())
        result = result.merge(part)
    return result
