"""Batched LSTM layer with hand-written backpropagation through time.

Gate order along the 4H axis is (input, forget, candidate, output).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def sigmoid(z):
    # tanh form never overflows
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def avg_pool(signal, kernel: int, stride: int) -> np.ndarray:
    """Mean over windows ``[j*stride, j*stride + kernel)`` of the last axis.

    Only complete windows are produced: ``(N - kernel) // stride + 1`` outputs.
    """
    x = np.asarray(signal)
    if kernel < 1 or stride < 1:
        raise ValueError("pooling kernel and stride must be >= 1")
    if x.shape[-1] < kernel:
        raise ValueError(f"signal of length {x.shape[-1]} shorter than pooling kernel {kernel}")
    return sliding_window_view(x, kernel, axis=-1)[..., ::stride, :].mean(axis=-1)


@dataclass
class LSTMParams:
    W_ih: np.ndarray  # (4H, in)
    W_hh: np.ndarray  # (4H, H)
    b_ih: np.ndarray  # (4H,)
    b_hh: np.ndarray  # (4H,)

    @property
    def hidden_dim(self) -> int:
        return self.W_hh.shape[1]

    @property
    def input_dim(self) -> int:
        return self.W_ih.shape[1]

    def arrays(self) -> dict[str, np.ndarray]:
        return {"W_ih": self.W_ih, "W_hh": self.W_hh, "b_ih": self.b_ih, "b_hh": self.b_hh}

    @classmethod
    def init(cls, rng: np.random.Generator, input_dim: int, hidden_dim: int, dtype=np.float64):
        bound = 1.0 / np.sqrt(hidden_dim)
        H = hidden_dim
        b_ih = np.zeros(4 * H, dtype=dtype)
        b_ih[H:2 * H] = 1.0  # forget gate starts open
        return cls(
            W_ih=rng.uniform(-bound, bound, (4 * H, input_dim)).astype(dtype),
            W_hh=rng.uniform(-bound, bound, (4 * H, H)).astype(dtype),
            b_ih=b_ih,
            b_hh=np.zeros(4 * H, dtype=dtype),
        )


def lstm_forward(X: np.ndarray, p: LSTMParams):
    """Run a zero-initialised LSTM over ``X`` of shape ``(B, T, in)``.

    Returns the hidden sequence ``(B, T, H)`` and a cache for ``lstm_backward``.
    """
    B, T, _ = X.shape
    H = p.hidden_dim
    h = np.zeros((B, H), dtype=X.dtype)
    c = np.zeros((B, H), dtype=X.dtype)
    hs = np.empty((B, T, H), dtype=X.dtype)
    cs = np.empty((B, T, H), dtype=X.dtype)
    gates = np.empty((B, T, 4 * H), dtype=X.dtype)
    bias = p.b_ih + p.b_hh
    for t in range(T):
        z = X[:, t] @ p.W_ih.T + h @ p.W_hh.T + bias
        a = np.empty_like(z)
        a[:, :2 * H] = sigmoid(z[:, :2 * H])
        a[:, 2 * H:3 * H] = np.tanh(z[:, 2 * H:3 * H])
        a[:, 3 * H:] = sigmoid(z[:, 3 * H:])
        c = a[:, H:2 * H] * c + a[:, :H] * a[:, 2 * H:3 * H]
        h = a[:, 3 * H:] * np.tanh(c)
        hs[:, t], cs[:, t], gates[:, t] = h, c, a
    return hs, (X, hs, cs, gates)


def lstm_backward(dH: np.ndarray, cache, p: LSTMParams):
    """Gradients of the loss w.r.t. parameters and inputs given ``dL/dh_t``."""
    X, hs, cs, gates = cache
    B, T, H = hs.shape
    grads = {k: np.zeros_like(v) for k, v in p.arrays().items()}
    dX = np.empty_like(X)
    dh_next = np.zeros((B, H), dtype=X.dtype)
    dc_next = np.zeros((B, H), dtype=X.dtype)
    dz = np.empty((B, 4 * H), dtype=X.dtype)
    for t in reversed(range(T)):
        a = gates[:, t]
        i, f, g, o = a[:, :H], a[:, H:2 * H], a[:, 2 * H:3 * H], a[:, 3 * H:]
        c_prev = cs[:, t - 1] if t else np.zeros((B, H), dtype=X.dtype)
        h_prev = hs[:, t - 1] if t else np.zeros((B, H), dtype=X.dtype)
        tc = np.tanh(cs[:, t])
        dh = dH[:, t] + dh_next
        dc = dc_next + dh * o * (1.0 - tc * tc)
        dz[:, :H] = dc * g * i * (1.0 - i)
        dz[:, H:2 * H] = dc * c_prev * f * (1.0 - f)
        dz[:, 2 * H:3 * H] = dc * i * (1.0 - g * g)
        dz[:, 3 * H:] = dh * tc * o * (1.0 - o)
        dc_next = dc * f
        grads["W_ih"] += dz.T @ X[:, t]
        grads["W_hh"] += dz.T @ h_prev
        grads["b_ih"] += dz.sum(axis=0)
        dX[:, t] = dz @ p.W_ih
        dh_next = dz @ p.W_hh
    grads["b_hh"] = grads["b_ih"].copy()
    return grads, dX
