"""
objectives/masking.py
Region masking for the image-reconstruction objectives.

MIM zeroes every region of one randomly chosen real image per example;
MRM zeroes each real region independently with probability p.
"""
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from dataio.records import Batch
from tensor_core import InvalidInputError

MaskMode = Literal["mim", "mrm"]

DEFAULT_REGION_PROBABILITY = 0.15


@dataclass(frozen=True)
class MaskPlan:
    """
    mode: "mim" (one whole image) or "mrm" (random regions).
    image_indices: the masked image per example (MIM), or None.
    masked: [B, R] bool, True where the region slot was zeroed.
    """
    mode:          MaskMode
    masked:        np.ndarray
    image_indices: Optional[np.ndarray] = None
    seed:          Optional[int] = None

    @property
    def count(self) -> int:
        return int(self.masked.sum())

    @property
    def keep(self) -> np.ndarray:
        """[B, R, 1] float multiplier, 0 at masked slots."""
        return (~self.masked).astype(np.float32)[..., None]


def _apply(batch: Batch, masked: np.ndarray) -> Batch:
    return batch.with_features(np.where(masked[..., None], 0.0, batch.features).astype(batch.features.dtype))


def mask_one_image(
    batch: Batch,
    rng: np.random.Generator,
    regions_per_image: int,
    seed: Optional[int] = None,
) -> tuple[Batch, MaskPlan]:
    """Zero all m regions of one uniformly chosen non-padded image per example."""
    counts = np.asarray(batch.image_count)
    if counts.size and counts.min() < 1:
        bad = int(np.argmin(counts))
        raise InvalidInputError(f"example {bad} of the batch has no images to mask")
    b, r = batch.region_mask.shape
    masked = np.zeros((b, r), dtype=bool)
    chosen = np.empty(b, dtype=np.int64)
    for row in range(b):
        i = int(rng.integers(0, counts[row]))
        chosen[row] = i
        masked[row, i * regions_per_image:(i + 1) * regions_per_image] = True
    masked &= batch.region_mask
    return _apply(batch, masked), MaskPlan("mim", masked, chosen, seed)


def mask_regions(
    batch: Batch,
    rng: np.random.Generator,
    p: float = DEFAULT_REGION_PROBABILITY,
    seed: Optional[int] = None,
) -> tuple[Batch, MaskPlan]:
    """Independent Bernoulli(p) masking of real (non-padded) region slots."""
    if not 0.0 < p < 1.0:
        raise InvalidInputError(f"mask probability must lie in (0, 1), got {p}")
    masked = (rng.random(batch.region_mask.shape) < p) & batch.region_mask
    return _apply(batch, masked), MaskPlan("mrm", masked, None, seed)
