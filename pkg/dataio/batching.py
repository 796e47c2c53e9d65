"""
dataio/batching.py
Fixed-length padding/truncation, collation into batches, and seeded batch
streams that cycle through a language pool epoch by epoch.
"""
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterator, Sequence

import numpy as np

from config.settings import settings
from dataio.records import Batch, MultimodalExample
from tensor_core import InvalidInputError

if TYPE_CHECKING:
    from model.config import ModelConfig


@dataclass(frozen=True)
class PaddedExample:
    id:            str
    language:      str
    article_ids:   np.ndarray   # [T]
    article_mask:  np.ndarray   # [T] bool
    target_ids:    np.ndarray   # [S]
    summary_mask:  np.ndarray   # [S] bool
    decoder_input: np.ndarray   # [S]
    features:      np.ndarray   # [n*m, d_v]
    region_mask:   np.ndarray   # [n*m] bool
    boxes:         np.ndarray   # [n*m, 4]
    q:             np.ndarray   # [n*m, C]
    image_count:   int


def _fit(ids: np.ndarray, length: int) -> tuple[np.ndarray, np.ndarray]:
    out = np.full(length, settings.pad_id, dtype=np.int64)
    kept = ids[:length]
    out[: kept.size] = kept
    mask = np.zeros(length, dtype=bool)
    mask[: kept.size] = True
    return out, mask


def _fit_images(arr: np.ndarray, n: int) -> np.ndarray:
    """Keep the first n image slots, zero-padding when fewer exist."""
    out = np.zeros((n,) + arr.shape[1:], dtype=np.float32)
    kept = arr[:n]
    out[: kept.shape[0]] = kept
    return out


def pad_truncate(example: MultimodalExample, config: "ModelConfig") -> PaddedExample:
    """
    Article: head kept, padded to max_text_len.
    Summary: head clipped to max_summary_len - 1, then END, then PAD.
    Images: first n kept, regions flattened image-major to n*m slots.
    """
    n, m = config.n_images, config.regions_per_image
    if example.regions_per_image != m:
        raise InvalidInputError(f"example {example.id!r} has {example.regions_per_image} regions per image, config {m}")
    if example.features.shape[-1] != config.d_v:
        raise InvalidInputError(f"example {example.id!r} has d_v={example.features.shape[-1]}, config {config.d_v}")
    if example.q.shape[-1] != config.detector_classes:
        raise InvalidInputError(f"example {example.id!r} has C={example.q.shape[-1]}, config {config.detector_classes}")

    article, article_mask = _fit(example.article_ids, config.max_text_len)

    s = config.max_summary_len
    content = example.summary_ids[: s - 1]
    target = np.full(s, settings.pad_id, dtype=np.int64)
    target[: content.size] = content
    target[content.size] = settings.end_id
    summary_mask = np.zeros(s, dtype=bool)
    summary_mask[: content.size + 1] = True
    decoder_input = np.concatenate([[settings.start_id], target[:-1]]).astype(np.int64)

    count = min(example.image_count, n)
    region_mask = np.zeros((n, m), dtype=bool)
    region_mask[:count] = True

    return PaddedExample(
        id=example.id,
        language=example.language,
        article_ids=article,
        article_mask=article_mask,
        target_ids=target,
        summary_mask=summary_mask,
        decoder_input=decoder_input,
        features=_fit_images(example.features, n).reshape(n * m, -1),
        region_mask=region_mask.reshape(-1),
        boxes=_fit_images(example.boxes, n).reshape(n * m, 4),
        q=_fit_images(example.q, n).reshape(n * m, -1),
        image_count=count,
    )


def collate(padded: Sequence[PaddedExample]) -> Batch:
    if not padded:
        raise InvalidInputError("cannot collate an empty batch")
    languages = {p.language for p in padded}
    if len(languages) != 1:
        raise InvalidInputError(f"a batch must come from a single language, got {sorted(languages)}")

    def stack(name: str) -> np.ndarray:
        return np.stack([getattr(p, name) for p in padded])

    return Batch(
        article_ids=stack("article_ids"),
        article_mask=stack("article_mask"),
        target_ids=stack("target_ids"),
        summary_mask=stack("summary_mask"),
        decoder_input=stack("decoder_input"),
        features=stack("features"),
        region_mask=stack("region_mask"),
        boxes=stack("boxes"),
        q=stack("q"),
        image_count=np.array([p.image_count for p in padded], dtype=np.int64),
        language=padded[0].language,
        example_ids=[p.id for p in padded],
    )


def make_batch(examples: Sequence[MultimodalExample], config: "ModelConfig") -> Batch:
    return collate([pad_truncate(ex, config) for ex in examples])


def iterate_batches(examples: Sequence[MultimodalExample], config: "ModelConfig", batch_size: int) -> Iterator[Batch]:
    """In-order, non-shuffled batches (evaluation)."""
    for start in range(0, len(examples), batch_size):
        yield make_batch(examples[start:start + batch_size], config)


class BatchStream:
    """
    Endless batches from one language pool. Each epoch walks a fresh seeded
    permutation; a batch never spans two epochs.
    """

    def __init__(self, examples: Sequence[MultimodalExample], config: "ModelConfig",
                 batch_size: int, rng: np.random.Generator) -> None:
        if not examples:
            raise InvalidInputError("batch stream needs at least one example")
        if batch_size < 1:
            raise InvalidInputError(f"batch_size must be positive, got {batch_size}")
        self._padded = [pad_truncate(ex, config) for ex in examples]
        self._batch_size = min(batch_size, len(self._padded))
        self._rng = rng
        self._order: list[int] = []
        self.epoch = 0

    def next(self) -> Batch:
        if len(self._order) < self._batch_size:
            self._order = [int(i) for i in self._rng.permutation(len(self._padded))]
            self.epoch += 1
        picked, self._order = self._order[: self._batch_size], self._order[self._batch_size:]
        return collate([self._padded[i] for i in picked])
