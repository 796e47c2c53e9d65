"""
model/decoder.py
Transformer decoder: causal self-attention, cross-attention over a memory
(Z_{T+V} for summarization, the bridged visual states for Vis2Sum), FFN,
and the output projection p(y_t) = softmax(W_o z_t + b_o).
"""
import numpy as np

from model.layers import (
    FeedForward,
    Module,
    MultiHeadAttention,
    RMSNorm,
    causal_bias,
    init_weight,
    key_padding_bias,
    zeros_param,
)
from tensor_core import Tensor, dropout
from tensor_core.tensor import matmul


class DecoderLayer(Module):
    def __init__(self, width: int, heads: int, ffn_dim: int, rng, dtype, dropout_rate: float, dropout_rng) -> None:
        self.self_norm = RMSNorm(width, dtype)
        self.self_attn = MultiHeadAttention(width, width, width, width, heads, rng, dtype, dropout_rate, dropout_rng)
        self.cross_norm = RMSNorm(width, dtype)
        self.memory_norm = RMSNorm(width, dtype)
        self.cross_attn = MultiHeadAttention(width, width, width, width, heads, rng, dtype, dropout_rate, dropout_rng)
        self.ffn_norm = RMSNorm(width, dtype)
        self.ffn = FeedForward(width, ffn_dim, rng, dtype, dropout_rate, dropout_rng)
        self._dropout = dropout_rate
        self._rng = dropout_rng

    def __call__(self, x: Tensor, memory: Tensor, self_bias: np.ndarray, memory_bias: np.ndarray) -> Tensor:
        h = self.self_norm(x)
        s = x + dropout(self.self_attn(h, h, self_bias), self._dropout, self._rng, self.training)
        c = s + dropout(
            self.cross_attn(self.cross_norm(s), self.memory_norm(memory), memory_bias),
            self._dropout, self._rng, self.training,
        )
        return c + dropout(self.ffn(self.ffn_norm(c)), self._dropout, self._rng, self.training)


class Decoder(Module):
    def __init__(self, vocab_size: int, width: int, depth: int, heads: int, ffn_dim: int,
                 rng, dtype, dropout_rate: float, dropout_rng) -> None:
        self.layers = [
            DecoderLayer(width, heads, ffn_dim, rng, dtype, dropout_rate, dropout_rng)
            for _ in range(depth)
        ]
        self.final_norm = RMSNorm(width, dtype)
        self.w_o = init_weight(rng, (width, vocab_size), dtype)
        self.b_o = zeros_param((vocab_size,), dtype)

    def __call__(self, y: Tensor, memory: Tensor, memory_mask: np.ndarray) -> Tensor:
        """y: embedded prefix [B, t, d]; memory [B, S, d] -> logits [B, t, V]."""
        self_bias = causal_bias(y.shape[1], y.dtype)
        memory_bias = key_padding_bias(memory_mask, y.dtype)
        for layer in self.layers:
            y = layer(y, memory, self_bias, memory_bias)
        return matmul(self.final_norm(y), self.w_o) + self.b_o
