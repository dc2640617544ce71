"""Dense-matrix neural net kernels with hand-derived backward passes.

Matrices are numpy arrays, float32 in production. Layers accept a single
window (rows, dim) or a stacked batch (batch, rows, dim); the math is
identical per window and parameter gradients sum over the batch. Every
layer exposes forward(x) -> (y, cache) and backward(d_y, cache) -> d_x;
backward accumulates parameter gradients in place. Caches are
caller-owned, so forward passes over a shared read-only model are
thread-safe. A float64 twin of each layer (dtype argument) exists solely
for gradient checking.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, DimensionError
from .rng import Rng


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with an explicit inner-dimension check."""
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError(f"matmul expects 2-D arrays, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul shape mismatch: {a.shape} x {b.shape}")
    return a @ b


def softmax_rows(x: np.ndarray) -> np.ndarray:
    """Softmax along the last axis, stabilized by the row maximum."""
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


class Parameter:
    """A learnable array paired with an accumulated gradient."""

    __slots__ = ("name", "value", "grad")

    def __init__(self, name: str, value: np.ndarray):
        self.name = name
        self.value = value
        self.grad = np.zeros_like(value)

    @property
    def shape(self):
        return self.value.shape


class Linear:
    """y = x @ w + b over the last axis."""

    def __init__(self, name: str, in_dim: int, out_dim: int, dtype=np.float32):
        self.w = Parameter(f"{name}.w", np.zeros((in_dim, out_dim), dtype=dtype))
        self.b = Parameter(f"{name}.b", np.zeros(out_dim, dtype=dtype))

    def init(self, rng: Rng, std: float = 0.02):
        self.w.value[:] = rng.normal_matrix(*self.w.shape, std=std).astype(self.w.value.dtype)
        return self

    def parameters(self):
        return [self.w, self.b]

    def forward(self, x: np.ndarray):
        if x.shape[-1] != self.w.shape[0]:
            raise DimensionError(f"linear expects {self.w.shape[0]} features, got {x.shape}")
        return x @ self.w.value + self.b.value, x

    def backward(self, d_y: np.ndarray, cache) -> np.ndarray:
        x = cache
        in_dim, out_dim = self.w.shape
        self.w.grad += x.reshape(-1, in_dim).T @ d_y.reshape(-1, out_dim)
        self.b.grad += d_y.reshape(-1, out_dim).sum(axis=0)
        return d_y @ self.w.value.T


class LayerNorm:
    """Normalize each row (last axis) to zero mean / unit variance, then affine."""

    def __init__(self, name: str, dim: int, eps: float = 1e-5, dtype=np.float32):
        self.gamma = Parameter(f"{name}.gamma", np.ones(dim, dtype=dtype))
        self.beta = Parameter(f"{name}.beta", np.zeros(dim, dtype=dtype))
        self.eps = eps

    def parameters(self):
        return [self.gamma, self.beta]

    def forward(self, x: np.ndarray):
        if x.shape[-1] != self.gamma.value.shape[0]:
            raise DimensionError(
                f"layer_norm expects {self.gamma.value.shape[0]} features, got {x.shape}"
            )
        mean = x.mean(axis=-1, keepdims=True)
        centered = x - mean
        var = (centered * centered).mean(axis=-1, keepdims=True)
        inv_std = 1.0 / np.sqrt(var + self.eps)
        x_hat = centered * inv_std
        y = x_hat * self.gamma.value + self.beta.value
        return y, (x_hat, inv_std)

    def backward(self, d_y: np.ndarray, cache) -> np.ndarray:
        x_hat, inv_std = cache
        lead = tuple(range(d_y.ndim - 1))
        self.gamma.grad += (d_y * x_hat).sum(axis=lead)
        self.beta.grad += d_y.sum(axis=lead)
        d_hat = d_y * self.gamma.value
        mean_d = d_hat.mean(axis=-1, keepdims=True)
        mean_dx = (d_hat * x_hat).mean(axis=-1, keepdims=True)
        return inv_std * (d_hat - mean_d - x_hat * mean_dx)


class MultiHeadAttention:
    """Scaled dot-product self-attention with heads folded into one matrix."""

    def __init__(self, name: str, dim: int, heads: int, dtype=np.float32):
        if dim % heads != 0:
            raise ConfigError(f"attention dim {dim} not divisible by {heads} heads")
        self.dim = dim
        self.heads = heads
        self.head_dim = dim // heads
        self.q = Linear(f"{name}.q", dim, dim, dtype)
        self.k = Linear(f"{name}.k", dim, dim, dtype)
        self.v = Linear(f"{name}.v", dim, dim, dtype)
        self.out = Linear(f"{name}.out", dim, dim, dtype)

    def init(self, rng: Rng, std: float = 0.02):
        for lin in (self.q, self.k, self.v, self.out):
            lin.init(rng, std)
        return self

    def parameters(self):
        return self.q.parameters() + self.k.parameters() + self.v.parameters() + self.out.parameters()

    def _split(self, x: np.ndarray) -> np.ndarray:
        # (batch, L, dim) -> (batch, heads, L, head_dim)
        b, length, _ = x.shape
        return x.reshape(b, length, self.heads, self.head_dim).transpose(0, 2, 1, 3)

    def _merge(self, x: np.ndarray) -> np.ndarray:
        b, _, length, _ = x.shape
        return x.transpose(0, 2, 1, 3).reshape(b, length, self.dim)

    def forward(self, x: np.ndarray):
        single = x.ndim == 2
        xb = x[None] if single else x
        q_flat, q_cache = self.q.forward(xb)
        k_flat, k_cache = self.k.forward(xb)
        v_flat, v_cache = self.v.forward(xb)
        q, k, v = self._split(q_flat), self._split(k_flat), self._split(v_flat)
        scale = 1.0 / np.sqrt(self.head_dim)
        scores = (q @ k.transpose(0, 1, 3, 2)) * scale
        attn = softmax_rows(scores)
        ctx = attn @ v
        merged = self._merge(ctx)
        y, out_cache = self.out.forward(merged)
        cache = (single, q_cache, k_cache, v_cache, out_cache, q, k, v, attn)
        return (y[0] if single else y), cache

    def backward(self, d_y: np.ndarray, cache) -> np.ndarray:
        single, q_cache, k_cache, v_cache, out_cache, q, k, v, attn = cache
        d_yb = d_y[None] if single else d_y
        d_merged = self.out.backward(d_yb, out_cache)
        d_ctx = self._split(d_merged)
        d_attn = d_ctx @ v.transpose(0, 1, 3, 2)
        d_v = attn.transpose(0, 1, 3, 2) @ d_ctx
        # Softmax backward per attention row.
        d_scores = attn * (d_attn - (d_attn * attn).sum(axis=-1, keepdims=True))
        scale = 1.0 / np.sqrt(self.head_dim)
        d_q = (d_scores @ k) * scale
        d_k = (d_scores.transpose(0, 1, 3, 2) @ q) * scale
        d_x = self.q.backward(self._merge(d_q), q_cache)
        d_x += self.k.backward(self._merge(d_k), k_cache)
        d_x += self.v.backward(self._merge(d_v), v_cache)
        return d_x[0] if single else d_x


class FeedForward:
    """Two-layer MLP with ReLU: w2 . relu(w1 . x + b1) + b2."""

    def __init__(self, name: str, dim: int, hidden_dim: int, dtype=np.float32):
        self.inner = Linear(f"{name}.inner", dim, hidden_dim, dtype)
        self.outer = Linear(f"{name}.outer", hidden_dim, dim, dtype)

    def init(self, rng: Rng, std: float = 0.02):
        self.inner.init(rng, std)
        self.outer.init(rng, std)
        return self

    def parameters(self):
        return self.inner.parameters() + self.outer.parameters()

    def forward(self, x: np.ndarray):
        z, inner_cache = self.inner.forward(x)
        h = np.maximum(z, 0.0)
        y, outer_cache = self.outer.forward(h)
        return y, (inner_cache, outer_cache, z)

    def backward(self, d_y: np.ndarray, cache) -> np.ndarray:
        inner_cache, outer_cache, z = cache
        d_h = self.outer.backward(d_y, outer_cache)
        d_z = d_h * (z > 0.0)
        return self.inner.backward(d_z, inner_cache)


def dropout(x: np.ndarray, p: float, rng: Rng | None, training: bool):
    """Inverted dropout: returns (y, mask) with the 1/(1-p) scale folded
    into the mask so backward is d_x = d_y * mask."""
    if not (0.0 <= p < 1.0):
        raise ConfigError(f"dropout probability must be in [0, 1), got {p}")
    if not training or p == 0.0:
        return x, np.ones_like(x)
    if rng is None:
        raise ConfigError("training-mode dropout requires an rng")
    keep = (rng.uniforms(x.size) >= p).reshape(x.shape)
    mask = keep.astype(x.dtype) / (1.0 - p)
    return x * mask, mask


class AdamW:
    """Adam with decoupled weight decay and bias correction.

    Gradients are read but never cleared here; callers zero them at the
    start of each accumulation cycle.
    """

    def __init__(
        self,
        params: list[Parameter],
        lr: float = 1e-4,
        weight_decay: float = 1e-4,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        if lr <= 0:
            raise ConfigError(f"learning rate must be positive, got {lr}")
        if weight_decay < 0:
            raise ConfigError(f"weight decay must be non-negative, got {weight_decay}")
        self.params = params
        self.lr = lr
        self.weight_decay = weight_decay
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros_like(p.value) for p in params]
        self.v = [np.zeros_like(p.value) for p in params]

    def step(self):
        self.step_count += 1
        t = self.step_count
        bias1 = 1.0 - self.beta1**t
        bias2 = 1.0 - self.beta2**t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad
            if g.shape != p.value.shape:
                raise DimensionError(f"gradient shape {g.shape} != parameter shape {p.value.shape}")
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            m_hat = m / bias1
            v_hat = v / bias2
            p.value -= self.lr * (m_hat / (np.sqrt(v_hat) + self.eps) + self.weight_decay * p.value)

    def zero_grad(self):
        for p in self.params:
            p.grad[:] = 0.0
