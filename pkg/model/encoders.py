"""
model/encoders.py
Textual encoder (token table + sinusoidal positions + L layers) and visual
encoder (four-way region embedding + H layers).
"""
from typing import Optional, Union

import numpy as np

from model.layers import Linear, Module, TransformerStack, init_weight, sinusoidal_positions
from tensor_core import InvalidInputError, Tensor, embedding
from tensor_core.tensor import lift


class TextEncoder(Module):
    def __init__(self, vocab_size: int, width: int, depth: int, heads: int, ffn_dim: int,
                 max_len: int, rng, dtype, dropout_rate: float, dropout_rng) -> None:
        self.token_embedding = init_weight(rng, (vocab_size, width), dtype, std=1.0)
        self.stack = TransformerStack(width, depth, heads, ffn_dim, rng, dtype, dropout_rate, dropout_rng)
        self._positions = sinusoidal_positions(max_len, width, dtype)

    @property
    def positions(self) -> np.ndarray:
        return self._positions

    def embed(self, ids: np.ndarray) -> Tensor:
        """[B, T] ids -> [B, T, d] = X + E_pe[:T]."""
        ids = np.asarray(ids)
        t = ids.shape[-1]
        if t > self._positions.shape[0]:
            raise InvalidInputError(f"sequence length {t} exceeds max length {self._positions.shape[0]}")
        return embedding(self.token_embedding, ids) + self._positions[:t]

    def __call__(self, z0: Tensor, mask: np.ndarray) -> Tensor:
        return self.stack(z0, mask)


class VisualEncoder(Module):
    """o_ij = v_ij + E_box(b_ij) + E_img[i] + E_reg[j], then H residual layers."""

    def __init__(self, n_images: int, regions: int, width: int, depth: int, heads: int, ffn_dim: int,
                 rng, dtype, dropout_rate: float, dropout_rng) -> None:
        self.box_projection = Linear(4, width, rng, dtype)
        self.image_embedding = init_weight(rng, (n_images, width), dtype, std=1.0)
        self.region_embedding = init_weight(rng, (regions, width), dtype, std=1.0)
        self.stack = TransformerStack(width, depth, heads, ffn_dim, rng, dtype, dropout_rate, dropout_rng)
        self._n = n_images
        self._m = regions

    def default_ids(self) -> tuple[np.ndarray, np.ndarray]:
        """Image-major slot ids: image i repeated m times, regions 0..m-1 tiled n times."""
        return np.repeat(np.arange(self._n), self._m), np.tile(np.arange(self._m), self._n)

    def embed(
        self,
        features: Union[np.ndarray, Tensor],
        boxes: np.ndarray,
        image_ids: Optional[np.ndarray] = None,
        region_ids: Optional[np.ndarray] = None,
    ) -> Tensor:
        """
        features [B, n*m, d_v] (or [B, n, m, d_v]), boxes [B, n*m, 4] in [0, 1]
        -> [B, n*m, d_v], flattened image-major.
        """
        boxes = np.asarray(boxes)
        if boxes.size and (boxes.min() < 0.0 or boxes.max() > 1.0):
            raise InvalidInputError("box coordinates must lie in [0, 1]")
        dtype = self.image_embedding.dtype
        if not isinstance(features, Tensor):
            features = Tensor(np.asarray(features), dtype=dtype)
        b = features.shape[0]
        width = features.shape[-1]
        features = features.reshape(b, -1, width) if features.ndim == 4 else features
        boxes = boxes.reshape(b, -1, 4)
        if image_ids is None or region_ids is None:
            image_ids, region_ids = self.default_ids()
        return (
            features
            + self.box_projection(lift(boxes, features))
            + embedding(self.image_embedding, image_ids)
            + embedding(self.region_embedding, region_ids)
        )

    def __call__(self, o: Tensor, mask: np.ndarray) -> Tensor:
        return self.stack(o, mask)
