"""
model/fusion.py
Vision-guided fusion: text-queried cross-modal attention followed by a
sigmoid forget gate that filters the attended visual features.
"""
import numpy as np

from model.layers import Linear, Module, MultiHeadAttention, key_padding_bias
from tensor_core import Tensor, sigmoid
from tensor_core.tensor import concat


class FusionLayer(Module):
    """
    M = CMHA(Z_T W_q, Z_V W_k, Z_V W_v)                   [T, d_c]
    G = sigmoid(Concat(Z_T, M) W_g + b_g)                 [T, d_c]
    Z_{T+V} = Concat(Z_T, G * M) W_z + b_z                [T, d]
    """

    def __init__(self, d: int, d_c: int, d_v: int, heads: int, rng, dtype) -> None:
        self.cross_attn = MultiHeadAttention(d, d_v, d_c, d_c, heads, rng, dtype)
        self.gate = Linear(d + d_c, d_c, rng, dtype)
        self.merge = Linear(d + d_c, d, rng, dtype)

    def __call__(self, z_text: Tensor, z_vision: Tensor, vision_mask: np.ndarray) -> tuple[Tensor, Tensor]:
        """Returns (fused [B, T, d], gate G [B, T, d_c])."""
        m = self.cross_attn(z_text, z_vision, key_padding_bias(vision_mask, z_text.dtype))
        g = sigmoid(self.gate(concat([z_text, m], axis=-1)))
        fused = self.merge(concat([z_text, g * m], axis=-1))
        return fused, g
