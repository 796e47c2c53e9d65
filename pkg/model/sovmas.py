"""
model/sovmas.py
The vision-guided summarizer and its auxiliary heads.

Forward paths
-------------
forward_mas      article + images  -> summary log-probs   (memory Z_{T+V})
forward_vis2sum  images only       -> summary log-probs   (memory W_m Z_V)
forward_mim      masked images + summary -> class distributions at masked slots
"""
from typing import TYPE_CHECKING, Mapping, Optional, Union

import numpy as np

from dataio.records import Batch
from model.config import ModelConfig
from model.decoder import Decoder
from model.encoders import TextEncoder, VisualEncoder
from model.fusion import FusionLayer
from model.layers import Linear, Module, sinusoidal_positions
from monitoring.logger import get_logger
from tensor_core import (
    CheckpointError,
    InvalidInputError,
    Tensor,
    concat,
    dtype_for,
    embedding,
    gelu,
    log_softmax,
    softmax,
)
from tensor_core.tensor import lift

if TYPE_CHECKING:
    from objectives.masking import MaskPlan

log = get_logger(__name__)


class MimClassifier(Module):
    """d_v -> d_v/2 -> C, GELU in between."""

    def __init__(self, d_v: int, classes: int, rng, dtype) -> None:
        self.hidden = Linear(d_v, d_v // 2, rng, dtype)
        self.out = Linear(d_v // 2, classes, rng, dtype)

    def __call__(self, x: Tensor) -> Tensor:
        return self.out(gelu(self.hidden(x)))


class SovMasModel(Module):
    def __init__(self, config: ModelConfig) -> None:
        self.config = config
        dtype = dtype_for(config.precision)
        init_seq, drop_seq = np.random.SeedSequence(config.init_seed).spawn(2)
        rng = np.random.default_rng(init_seq)
        self._dropout_rng = np.random.default_rng(drop_seq)
        self._dtype = dtype

        c = config
        self.text_encoder = TextEncoder(
            c.vocab_size, c.d, c.layers, c.heads, c.ffn_dim, c.max_text_len,
            rng, dtype, c.dropout, self._dropout_rng,
        )
        self.visual_encoder = VisualEncoder(
            c.n_images, c.regions_per_image, c.d_v, c.visual_layers, c.heads, c.ffn_dim,
            rng, dtype, c.dropout, self._dropout_rng,
        )
        self.fusion = FusionLayer(c.d, c.d_c, c.d_v, c.heads, rng, dtype)
        self.decoder = Decoder(
            c.vocab_size, c.d, c.layers, c.heads, c.ffn_dim, rng, dtype, c.dropout, self._dropout_rng,
        )
        self.mim_classifier = MimClassifier(c.d_v, c.detector_classes, rng, dtype)
        self.vis2sum_bridge = Linear(c.d_v, c.d, rng, dtype, bias=False)
        self.summary_projection = Linear(c.d, c.d_v, rng, dtype)
        self._summary_positions = sinusoidal_positions(c.max_summary_len, c.d, dtype)

    @property
    def dtype(self) -> np.dtype:
        return self._dtype

    @property
    def token_embedding(self) -> Tensor:
        """Shared by the article encoder, the decoder input and the MIM summary stream."""
        return self.text_encoder.token_embedding

    # ── Stages ───────────────────────────────────────────────────────────────

    def embed_text(self, ids: np.ndarray) -> Tensor:
        return self.text_encoder.embed(ids)

    def encode_text(self, z0: Tensor, mask: np.ndarray) -> Tensor:
        return self.text_encoder(z0, mask)

    def embed_vision(self, features, boxes: np.ndarray, image_ids=None, region_ids=None) -> Tensor:
        return self.visual_encoder.embed(features, boxes, image_ids, region_ids)

    def encode_vision(self, o: Tensor, mask: np.ndarray) -> Tensor:
        return self.visual_encoder(o, mask)

    def fuse(self, z_text: Tensor, z_vision: Tensor, vision_mask: np.ndarray) -> tuple[Tensor, Tensor]:
        return self.fusion(z_text, z_vision, vision_mask)

    def embed_summary(self, ids: np.ndarray) -> Tensor:
        ids = np.asarray(ids)
        t = ids.shape[-1]
        if t > self._summary_positions.shape[0]:
            raise InvalidInputError(
                f"summary length {t} exceeds max_summary_len {self._summary_positions.shape[0]}"
            )
        return embedding(self.token_embedding, ids) + self._summary_positions[:t]

    def decode(self, prefix_ids: np.ndarray, memory: Tensor, memory_mask: np.ndarray) -> Tensor:
        """prefix ids [B, t] -> logits [B, t, V]."""
        return self.decoder(self.embed_summary(prefix_ids), memory, memory_mask)

    # ── Memories ─────────────────────────────────────────────────────────────

    def _features(self, batch: Batch) -> Tensor:
        return Tensor(batch.features, dtype=self._dtype)

    def mas_memory(self, batch: Batch) -> tuple[Tensor, np.ndarray]:
        """Z_{T+V} and its key mask (the article mask)."""
        z_text = self.encode_text(self.embed_text(batch.article_ids), batch.article_mask)
        z_vision = self.encode_vision(
            self.embed_vision(self._features(batch), batch.boxes), batch.region_mask,
        )
        fused, _ = self.fuse(z_text, z_vision, batch.region_mask)
        return fused, batch.article_mask

    def vis2sum_memory(self, batch: Batch) -> tuple[Tensor, np.ndarray]:
        z_vision = self.encode_vision(
            self.embed_vision(self._features(batch), batch.boxes), batch.region_mask,
        )
        return self.vis2sum_bridge(z_vision), batch.region_mask

    # ── Forward paths ────────────────────────────────────────────────────────

    def forward_mas(self, batch: Batch) -> Tensor:
        """Per-token log-probs [B, S, V] for the summary given article and images."""
        memory, mask = self.mas_memory(batch)
        return log_softmax(self.decode(batch.decoder_input, memory, mask), axis=-1)

    def forward_vis2sum(self, batch: Batch) -> Tensor:
        """Per-token log-probs [B, S, V] for the summary given the images alone."""
        memory, mask = self.vis2sum_memory(batch)
        return log_softmax(self.decode(batch.decoder_input, memory, mask), axis=-1)

    def forward_mim(
        self,
        batch: Batch,
        plan: "MaskPlan",
        features: Optional[Union[Tensor, np.ndarray]] = None,
    ) -> Tensor:
        """
        Class distributions [N, C] at the N masked region slots, row-major over
        (example, slot).

        Masking is applied here, inside the graph, so the stored features of
        masked slots receive an exactly zero gradient. `features` defaults to
        the batch features.
        """
        if plan.masked.shape != batch.region_mask.shape:
            raise InvalidInputError(
                f"mask plan shape {plan.masked.shape} does not match regions {batch.region_mask.shape}"
            )
        if plan.count == 0:
            raise InvalidInputError("forward_mim needs at least one masked region")
        if features is None:
            features = self._features(batch)
        elif not isinstance(features, Tensor):
            features = Tensor(features, dtype=self._dtype)
        b = features.shape[0]
        flat = features.reshape(b, -1, features.shape[-1]) if features.ndim == 4 else features
        masked_features = flat * lift(plan.keep, flat)

        regions = self.embed_vision(masked_features, batch.boxes)
        summary = self.summary_projection(self.embed_summary(batch.target_ids))
        stream = concat([regions, summary], axis=1)
        stream_mask = np.concatenate([batch.region_mask, batch.summary_mask], axis=1)
        encoded = self.encode_vision(stream, stream_mask)

        rows, slots = np.nonzero(plan.masked)
        return softmax(self.mim_classifier(encoded[rows, slots]), axis=-1)

    # ── Parameters ───────────────────────────────────────────────────────────

    def parameters(self) -> dict[str, Tensor]:
        return self.named_parameters()

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters().items()}

    def load_state_dict(self, state: Mapping[str, np.ndarray]) -> None:
        params = self.named_parameters()
        missing = sorted(set(params) - set(state))
        unexpected = sorted(set(state) - set(params))
        if missing or unexpected:
            raise CheckpointError(
                f"parameter names differ: missing={missing[:5]} unexpected={unexpected[:5]}"
            )
        for name, p in params.items():
            value = np.asarray(state[name])
            if value.shape != p.shape:
                raise CheckpointError(f"{name}: shape {value.shape} does not match {p.shape}")
            p.data = value.astype(p.dtype, copy=True)
        log.debug("Parameters loaded", tensors=len(params))

    def parameter_count(self) -> int:
        return sum(p.size for p in self.named_parameters().values())
