"""
model/layers.py
Building blocks: parameter containers, linear maps, RMS normalisation,
multi-head attention, feed-forward sublayers, residual transformer layers.
"""
from typing import Iterator, Optional

import numpy as np

from tensor_core import Tensor, dropout, gelu, rms_norm, softmax
from tensor_core.tensor import matmul

MASK_VALUE = -1e9


class Module:
    """
    Minimal parameter container.

    Public attributes that are parameters, sub-modules, or lists of
    sub-modules form the dotted parameter names ("visual_encoder.layers.0.attn.w_q").
    """

    training: bool = True

    def named_parameters(self, prefix: str = "") -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        for attr, value in vars(self).items():
            if attr.startswith("_"):
                continue
            name = f"{prefix}{attr}"
            if isinstance(value, Tensor) and value.requires_grad:
                out[name] = value
            elif isinstance(value, Module):
                out.update(value.named_parameters(f"{name}."))
            elif isinstance(value, list):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        out.update(item.named_parameters(f"{name}.{i}."))
        return out

    def modules(self) -> Iterator["Module"]:
        yield self
        for attr, value in vars(self).items():
            if attr.startswith("_"):
                continue
            if isinstance(value, Module):
                yield from value.modules()
            elif isinstance(value, list):
                for item in value:
                    if isinstance(item, Module):
                        yield from item.modules()

    def train(self, mode: bool = True) -> "Module":
        for m in self.modules():
            m.training = mode
        return self

    def eval(self) -> "Module":
        return self.train(False)


def init_weight(rng: np.random.Generator, shape: tuple[int, ...], dtype, std: Optional[float] = None) -> Tensor:
    if std is None:
        std = shape[0] ** -0.5
    return Tensor(rng.normal(0.0, std, size=shape), requires_grad=True, dtype=dtype)


def zeros_param(shape: tuple[int, ...], dtype) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True, dtype=dtype)


def ones_param(shape: tuple[int, ...], dtype) -> Tensor:
    return Tensor(np.ones(shape), requires_grad=True, dtype=dtype)


def sinusoidal_positions(length: int, width: int, dtype=np.float32) -> np.ndarray:
    """Fixed sine/cosine positional encodings, shape [length, width]."""
    pos = np.arange(length)[:, None]
    i = np.arange(width)[None, :]
    angle = pos / np.power(10000.0, (2 * (i // 2)) / width)
    return np.where(i % 2 == 0, np.sin(angle), np.cos(angle)).astype(dtype)


def key_padding_bias(key_mask: np.ndarray, dtype) -> np.ndarray:
    """
    [B, S] bool (True = real) -> additive bias [B, 1, 1, S].

    Rows without a single real key get a zero attention output in
    MultiHeadAttention instead of a uniform average over padding.
    """
    bias = np.where(key_mask, 0.0, MASK_VALUE).astype(dtype)
    return bias[:, None, None, :]


def causal_bias(length: int, dtype) -> np.ndarray:
    """[1, 1, T, T] bias letting position t attend to positions <= t."""
    allowed = np.tril(np.ones((length, length), dtype=bool))
    return np.where(allowed, 0.0, MASK_VALUE).astype(dtype)[None, None]


class Linear(Module):
    def __init__(self, d_in: int, d_out: int, rng: np.random.Generator, dtype, bias: bool = True) -> None:
        self.w = init_weight(rng, (d_in, d_out), dtype)
        self.b = zeros_param((d_out,), dtype) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        y = matmul(x, self.w)
        return y + self.b if self.b is not None else y


class RMSNorm(Module):
    def __init__(self, width: int, dtype) -> None:
        self.gain = ones_param((width,), dtype)

    def __call__(self, x: Tensor) -> Tensor:
        return rms_norm(x, self.gain)


class MultiHeadAttention(Module):
    """
    Scaled dot-product attention over `heads` heads.

    Queries come from width d_query, keys/values from width d_kv; attention runs
    at width d_attn and the output projection maps to d_out.
    """

    def __init__(
        self,
        d_query: int,
        d_kv: int,
        d_attn: int,
        d_out: int,
        heads: int,
        rng: np.random.Generator,
        dtype,
        dropout_rate: float = 0.0,
        dropout_rng: Optional[np.random.Generator] = None,
    ) -> None:
        self.heads = heads
        self.w_q = init_weight(rng, (d_query, d_attn), dtype)
        self.w_k = init_weight(rng, (d_kv, d_attn), dtype)
        self.w_v = init_weight(rng, (d_kv, d_attn), dtype)
        self.w_o = init_weight(rng, (d_attn, d_out), dtype)
        self._dropout = dropout_rate
        self._rng = dropout_rng

    def _split(self, x: Tensor) -> Tensor:
        b, t, width = x.shape
        return x.reshape(b, t, self.heads, width // self.heads).transpose(0, 2, 1, 3)

    def __call__(self, query: Tensor, memory: Tensor, bias: Optional[np.ndarray] = None) -> Tensor:
        q = self._split(matmul(query, self.w_q))
        k = self._split(matmul(memory, self.w_k))
        v = self._split(matmul(memory, self.w_v))
        scale = q.shape[-1] ** -0.5
        scores = matmul(q, k.transpose(0, 1, 3, 2)) * scale
        if bias is not None:
            scores = scores + bias
        weights = softmax(scores, axis=-1)
        if bias is not None:
            # a query row with no real key (no images, empty article) attends to nothing
            live = (bias > MASK_VALUE / 2).any(axis=-1, keepdims=True)
            if not live.all():
                weights = weights * live
        weights = dropout(weights, self._dropout, self._rng, self.training)
        context = matmul(weights, v)
        b, h, t, dk = context.shape
        merged = context.transpose(0, 2, 1, 3).reshape(b, t, h * dk)
        return matmul(merged, self.w_o)


class FeedForward(Module):
    def __init__(self, width: int, ffn_dim: int, rng, dtype, dropout_rate: float = 0.0, dropout_rng=None) -> None:
        self.inner = Linear(width, ffn_dim, rng, dtype)
        self.outer = Linear(ffn_dim, width, rng, dtype)
        self._dropout = dropout_rate
        self._rng = dropout_rng

    def __call__(self, x: Tensor) -> Tensor:
        hidden = dropout(gelu(self.inner(x)), self._dropout, self._rng, self.training)
        return self.outer(hidden)


class EncoderLayer(Module):
    """S = MHA(Z) + Z ; Z' = FFN(S) + S, with pre-sublayer RMS normalisation."""

    def __init__(self, width: int, heads: int, ffn_dim: int, rng, dtype, dropout_rate: float, dropout_rng) -> None:
        self.attn_norm = RMSNorm(width, dtype)
        self.attn = MultiHeadAttention(width, width, width, width, heads, rng, dtype, dropout_rate, dropout_rng)
        self.ffn_norm = RMSNorm(width, dtype)
        self.ffn = FeedForward(width, ffn_dim, rng, dtype, dropout_rate, dropout_rng)
        self._dropout = dropout_rate
        self._rng = dropout_rng

    def __call__(self, x: Tensor, bias: np.ndarray) -> Tensor:
        h = self.attn_norm(x)
        s = x + dropout(self.attn(h, h, bias), self._dropout, self._rng, self.training)
        return s + dropout(self.ffn(self.ffn_norm(s)), self._dropout, self._rng, self.training)


class TransformerStack(Module):
    """`depth` residual encoder layers; depth 0 is the identity."""

    def __init__(self, width: int, depth: int, heads: int, ffn_dim: int, rng, dtype, dropout_rate: float, dropout_rng) -> None:
        self.layers = [
            EncoderLayer(width, heads, ffn_dim, rng, dtype, dropout_rate, dropout_rng)
            for _ in range(depth)
        ]

    def __call__(self, x: Tensor, key_mask: np.ndarray) -> Tensor:
        bias = key_padding_bias(key_mask, x.dtype)
        for layer in self.layers:
            x = layer(x, bias)
        return x
