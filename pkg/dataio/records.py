"""
dataio/records.py
Example, corpus, manifest-record and batch types.
"""
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from tensor_core import InvalidInputError

Q_TOLERANCE = 1e-6


class ManifestRecord(BaseModel):
    """One JSON line of a corpus manifest."""
    model_config = ConfigDict(extra="forbid")

    id:          str
    lang:        str = Field(min_length=1)
    article_ids: list[int]
    summary_ids: list[int]
    n_images:    int = Field(ge=0)
    feat_offset: int = Field(ge=0)


@dataclass
class MultimodalExample:
    """
    One article/summary pair with its image regions.

    features [n, m, d_v], boxes [n, m, 4] and q [n, m, C] always carry the
    full n image slots; slots at index >= image_count are zero padding.
    """
    id:          str
    language:    str
    article_ids: np.ndarray
    summary_ids: np.ndarray
    features:    np.ndarray
    boxes:       np.ndarray
    q:           np.ndarray
    image_count: int

    def __post_init__(self) -> None:
        self.article_ids = np.asarray(self.article_ids, dtype=np.int64)
        self.summary_ids = np.asarray(self.summary_ids, dtype=np.int64)
        self.features = np.asarray(self.features, dtype=np.float32)
        self.boxes = np.asarray(self.boxes, dtype=np.float32)
        self.q = np.asarray(self.q, dtype=np.float32)

    @property
    def n_images(self) -> int:
        return self.features.shape[0]

    @property
    def regions_per_image(self) -> int:
        return self.features.shape[1]

    def validate(self, vocab_size: Optional[int] = None) -> None:
        """Raise InvalidInputError naming the first field that breaks an invariant."""
        n, m = self.features.shape[:2]
        if self.boxes.shape != (n, m, 4):
            raise InvalidInputError(f"boxes: expected shape {(n, m, 4)}, got {self.boxes.shape}")
        if self.q.shape[:2] != (n, m):
            raise InvalidInputError(f"q: expected leading shape {(n, m)}, got {self.q.shape[:2]}")
        if not 0 <= self.image_count <= n:
            raise InvalidInputError(f"n_images: {self.image_count} outside [0, {n}]")
        for name in ("features", "boxes", "q"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise InvalidInputError(f"{name}: non-finite values")
        if self.boxes.size and (self.boxes.min() < 0.0 or self.boxes.max() > 1.0):
            raise InvalidInputError("boxes: coordinates outside [0, 1]")
        real_q = self.q[: self.image_count].reshape(-1, self.q.shape[-1])
        if real_q.size:
            if real_q.min() < 0.0:
                raise InvalidInputError("q: negative probability")
            sums = real_q.sum(axis=-1, dtype=np.float64)
            worst = int(np.argmax(np.abs(sums - 1.0)))
            if abs(sums[worst] - 1.0) > Q_TOLERANCE:
                raise InvalidInputError(
                    f"q[{worst // m}][{worst % m}]: row sums to {sums[worst]:.6f}, expected 1"
                )
        if vocab_size is not None:
            for name in ("article_ids", "summary_ids"):
                ids = getattr(self, name)
                if ids.size and (ids.min() < 0 or ids.max() >= vocab_size):
                    raise InvalidInputError(f"{name}: token id outside [0, {vocab_size})")


@dataclass
class Corpus:
    """An immutable-by-convention list of examples sharing n, m, d_v and C."""
    n_images:          int
    regions_per_image: int
    d_v:               int
    classes:           int
    examples:          list[MultimodalExample] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self) -> Iterator[MultimodalExample]:
        return iter(self.examples)

    def languages(self) -> list[str]:
        """Languages in first-appearance order."""
        return list(dict.fromkeys(ex.language for ex in self.examples))

    def by_language(self) -> dict[str, list[MultimodalExample]]:
        grouped: dict[str, list[MultimodalExample]] = {}
        for ex in self.examples:
            grouped.setdefault(ex.language, []).append(ex)
        return grouped

    def subset(self, ids: list[str]) -> "Corpus":
        index = {ex.id: ex for ex in self.examples}
        missing = [i for i in ids if i not in index]
        if missing:
            raise InvalidInputError(f"unknown example ids: {missing[:5]}")
        return Corpus(self.n_images, self.regions_per_image, self.d_v, self.classes, [index[i] for i in ids])

    def with_examples(self, examples: list[MultimodalExample]) -> "Corpus":
        return Corpus(self.n_images, self.regions_per_image, self.d_v, self.classes, list(examples))


@dataclass
class Batch:
    """
    A padded minibatch from a single language.

    target_ids is the clipped summary followed by END and PAD; decoder_input
    is START followed by target_ids shifted right by one.
    """
    article_ids:   np.ndarray   # [B, T] int
    article_mask:  np.ndarray   # [B, T] bool, True = real token
    target_ids:    np.ndarray   # [B, S] int
    summary_mask:  np.ndarray   # [B, S] bool
    decoder_input: np.ndarray   # [B, S] int
    features:      np.ndarray   # [B, R, d_v]
    region_mask:   np.ndarray   # [B, R] bool
    boxes:         np.ndarray   # [B, R, 4]
    q:             np.ndarray   # [B, R, C]
    image_count:   np.ndarray   # [B] int
    language:      str
    example_ids:   list[str] = field(default_factory=list)

    @property
    def size(self) -> int:
        return self.article_ids.shape[0]

    def with_features(self, features: np.ndarray) -> "Batch":
        return Batch(
            self.article_ids, self.article_mask, self.target_ids, self.summary_mask,
            self.decoder_input, features, self.region_mask, self.boxes, self.q,
            self.image_count, self.language, list(self.example_ids),
        )

    def with_articles(self, article_ids: np.ndarray) -> "Batch":
        return Batch(
            article_ids, self.article_mask, self.target_ids, self.summary_mask,
            self.decoder_input, self.features, self.region_mask, self.boxes, self.q,
            self.image_count, self.language, list(self.example_ids),
        )

    def select(self, rows: list[int]) -> "Batch":
        rows = list(rows)
        return Batch(
            self.article_ids[rows], self.article_mask[rows], self.target_ids[rows],
            self.summary_mask[rows], self.decoder_input[rows], self.features[rows],
            self.region_mask[rows], self.boxes[rows], self.q[rows], self.image_count[rows],
            self.language, [self.example_ids[r] for r in rows] if self.example_ids else [],
        )
