"""Pooling + two stacked LSTM layers + per-cell dense heads.

Inputs are either raw sub-drives ``(B, ell)`` or pooled cells
``(B, n, D)``; every cell produces a lane distribution, so the network emits
``n`` outputs per sub-drive and the last one is the prediction.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from lanesig.nnet.lstm import LSTMParams, avg_pool, lstm_backward, lstm_forward
from lanesig.pipeline import make_subsegments


class LossMode(str, Enum):
    WEIGHTED = "weighted"
    UNIFORM = "uniform"
    LAST_CELL = "last_cell"

    @classmethod
    def parse(cls, value) -> "LossMode":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower().replace("-", "_"))


@dataclass
class ModelParams:
    pool_kernel: int
    pool_stride: int
    input_dim: int
    hidden_dim: int
    n_lanes: int
    n_cells: int
    layer1: LSTMParams
    layer2: LSTMParams
    head_W: np.ndarray  # (L, H) shared, or (n, L, H) per cell
    head_b: np.ndarray  # (L,) shared, or (n, L)
    shared_head: bool = True
    loss_mode: LossMode = LossMode.WEIGHTED

    def __post_init__(self):
        self.validate()

    @property
    def dtype(self):
        return self.head_W.dtype

    @property
    def cell_length(self) -> int:
        """Raw samples per cell, ``d``."""
        return (self.input_dim - 1) * self.pool_stride + self.pool_kernel

    @property
    def subdrive_length(self) -> int:
        d = self.cell_length
        return d + (self.n_cells - 1) * (d // 2)

    def validate(self) -> None:
        H, L, D, n = self.hidden_dim, self.n_lanes, self.input_dim, self.n_cells
        if min(self.pool_kernel, self.pool_stride, D, H, n) < 1 or L < 2:
            raise ValueError("model dimensions must be positive and n_lanes >= 2")
        expect = {
            "layer1.W_ih": (4 * H, D), "layer1.W_hh": (4 * H, H), "layer1.b_ih": (4 * H,),
            "layer1.b_hh": (4 * H,), "layer2.W_ih": (4 * H, H), "layer2.W_hh": (4 * H, H),
            "layer2.b_ih": (4 * H,), "layer2.b_hh": (4 * H,),
            "head.W": (L, H) if self.shared_head else (n, L, H),
            "head.b": (L,) if self.shared_head else (n, L),
        }
        for name, arr in self.arrays().items():
            if arr.shape != expect[name]:
                raise ValueError(f"{name} has shape {arr.shape}, expected {expect[name]}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
        if self.cell_length % 2:
            raise ValueError(f"pooling layout implies odd cell length {self.cell_length}")

    def arrays(self) -> dict[str, np.ndarray]:
        """All trainable arrays in checkpoint order."""
        out = {f"layer1.{k}": v for k, v in self.layer1.arrays().items()}
        out.update({f"layer2.{k}": v for k, v in self.layer2.arrays().items()})
        out["head.W"] = self.head_W
        out["head.b"] = self.head_b
        return out

    def set_array(self, name: str, value: np.ndarray) -> None:
        owner, attr = name.split(".")
        if owner == "head":
            setattr(self, f"head_{attr}", value)
        else:
            setattr(getattr(self, owner), attr, value)

    def n_parameters(self) -> int:
        return sum(a.size for a in self.arrays().values())

    def copy(self) -> "ModelParams":
        return copy.deepcopy(self)

    def astype(self, dtype) -> "ModelParams":
        out = self.copy()
        for name, arr in out.arrays().items():
            out.set_array(name, arr.astype(dtype))
        return out


def input_dim_for(d: int, kernel: int, stride: int) -> int:
    if d < kernel or (d - kernel) % stride:
        raise ValueError(f"cell length {d} incompatible with pooling kernel {kernel}, stride {stride}")
    return (d - kernel) // stride + 1


def init_model(*, d: int, n_cells: int, hidden_dim: int, n_lanes: int, pool_kernel: int,
               pool_stride: int, seed: int = 0, dtype=np.float32, shared_head: bool = True,
               loss_mode="weighted") -> ModelParams:
    """Weights uniform in ``±1/sqrt(H)``, biases zero except forget bias 1."""
    D = input_dim_for(d, pool_kernel, pool_stride)
    H = hidden_dim
    rng = np.random.default_rng(seed)
    layer1 = LSTMParams.init(rng, D, H, np.float64)
    layer2 = LSTMParams.init(rng, H, H, np.float64)
    bound = 1.0 / np.sqrt(H)
    head_shape = (n_lanes, H) if shared_head else (n_cells, n_lanes, H)
    head_W = rng.uniform(-bound, bound, head_shape)
    head_b = np.zeros(head_shape[:-1])
    model = ModelParams(pool_kernel=pool_kernel, pool_stride=pool_stride, input_dim=D,
                        hidden_dim=H, n_lanes=n_lanes, n_cells=n_cells, layer1=layer1,
                        layer2=layer2, head_W=head_W, head_b=head_b, shared_head=shared_head,
                        loss_mode=LossMode.parse(loss_mode))
    return model.astype(dtype)


def pool_cells(samples, d: int, kernel: int, stride: int, dtype=None) -> np.ndarray:
    """Cut raw sub-drives into half-overlapping cells and average-pool each.

    ``samples`` is ``(ell,)`` or ``(B, ell)``; the result is ``(B, n, D)``.
    """
    x = np.asarray(getattr(samples, "samples", samples))
    if x.ndim == 1:
        x = x[None]
    cells = np.stack([make_subsegments(row, d) for row in x])
    out = avg_pool(cells, kernel, stride)
    return out.astype(dtype or out.dtype, copy=False)


@dataclass
class CellOutputs:
    logits: np.ndarray  # (B, n, L)
    probs: np.ndarray  # (B, n, L)
    cache: dict | None = field(default=None, repr=False)

    @property
    def predictions(self) -> np.ndarray:
        """Argmax lane per cell; ties go to the lowest lane id."""
        return self.probs.argmax(axis=-1)

    @property
    def final(self) -> np.ndarray:
        return self.predictions[:, -1]


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _as_cells(model: ModelParams, inputs) -> np.ndarray:
    x = np.asarray(getattr(inputs, "samples", inputs))
    if x.ndim in (1, 2):
        if x.shape[-1] != model.subdrive_length:
            raise ValueError(f"raw input of length {x.shape[-1]}, model expects {model.subdrive_length}")
        x = pool_cells(x, model.cell_length, model.pool_kernel, model.pool_stride)
    if x.ndim != 3 or x.shape[1:] != (model.n_cells, model.input_dim):
        raise ValueError(f"cell input shape {x.shape[1:]} does not match model "
                         f"({model.n_cells}, {model.input_dim})")
    return x.astype(model.dtype, copy=False)


def forward(model: ModelParams, inputs, *, keep_cache: bool = False) -> CellOutputs:
    """Stateless forward pass; hidden and cell states start at zero each call."""
    X = _as_cells(model, inputs)
    h1, cache1 = lstm_forward(X, model.layer1)
    h2, cache2 = lstm_forward(h1, model.layer2)
    B, n, _ = h2.shape
    logits = np.empty((B, n, model.n_lanes), dtype=h2.dtype)
    # one cell at a time so a prefix computes bit-identically to a full unroll
    for t in range(n):
        W, b = (model.head_W, model.head_b) if model.shared_head else (model.head_W[t], model.head_b[t])
        logits[:, t] = h2[:, t] @ W.T + b
    cache = {"X": X, "l1": cache1, "l2": cache2, "h2": h2} if keep_cache else None
    return CellOutputs(logits=logits, probs=softmax(logits), cache=cache)


def cell_weights(mode, n: int) -> np.ndarray:
    """Per-cell loss weights; each set sums to 1."""
    if not isinstance(mode, (str, LossMode)):
        w = np.asarray(mode, dtype=float)
        if w.shape != (n,):
            raise ValueError(f"custom weights need shape ({n},), got {w.shape}")
        return w
    mode = LossMode.parse(mode)
    if mode is LossMode.WEIGHTED:
        i = np.arange(1, n + 1)
        return 2.0 * i / (n * (n + 1))
    if mode is LossMode.UNIFORM:
        return np.full(n, 1.0 / n)
    w = np.zeros(n)
    w[-1] = 1.0
    return w


def _targets(targets, B: int, n: int) -> np.ndarray:
    t = np.asarray(targets, dtype=np.int64)
    if t.ndim == 0:
        t = np.full((B, n), int(t))
    elif t.ndim == 1 and t.shape[0] == B:
        t = np.repeat(t[:, None], n, axis=1)
    if t.shape != (B, n):
        raise ValueError(f"targets shape {t.shape} does not match outputs ({B}, {n})")
    return t


def loss(outputs: CellOutputs, targets, mode="weighted") -> float:
    """Batch-mean of the cell-weighted cross-entropy.

    ``targets`` may be one lane per sub-drive ``(B,)`` or one per cell
    ``(B, n)``.
    """
    return float(loss_value(outputs, targets, mode))


def loss_value(outputs: CellOutputs, targets, mode="weighted"):
    """``loss`` as a numpy scalar in the outputs' own precision."""
    B, n, _ = outputs.probs.shape
    t = _targets(targets, B, n)
    w = cell_weights(mode, n).astype(outputs.logits.dtype)
    logp = _log_softmax(outputs.logits)
    ce = -np.take_along_axis(logp, t[..., None], axis=-1)[..., 0]
    return (ce * w).sum(axis=1).mean()


def _log_softmax(logits):
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def backward(model: ModelParams, outputs: CellOutputs, targets, mode="weighted") -> dict[str, np.ndarray]:
    """Exact gradients of ``loss(outputs, targets, mode)`` for every parameter.

    ``outputs`` must come from ``forward(..., keep_cache=True)``.
    """
    if outputs.cache is None:
        raise ValueError("backward needs the forward cache (keep_cache=True)")
    B, n, L = outputs.probs.shape
    t = _targets(targets, B, n)
    w = cell_weights(mode, n).astype(model.dtype)
    dlogits = outputs.probs.copy()
    np.put_along_axis(dlogits, t[..., None], np.take_along_axis(dlogits, t[..., None], -1) - 1, -1)
    dlogits *= w[None, :, None] / B
    h2 = outputs.cache["h2"]
    grads = {}
    if model.shared_head:
        grads["head.W"] = np.einsum("bnl,bnh->lh", dlogits, h2)
        grads["head.b"] = dlogits.sum(axis=(0, 1))
        dh2 = dlogits @ model.head_W
    else:
        grads["head.W"] = np.einsum("bnl,bnh->nlh", dlogits, h2)
        grads["head.b"] = dlogits.sum(axis=0)
        dh2 = np.einsum("bnl,nlh->bnh", dlogits, model.head_W)
    g2, dh1 = lstm_backward(dh2, outputs.cache["l2"], model.layer2)
    g1, _ = lstm_backward(dh1, outputs.cache["l1"], model.layer1)
    grads.update({f"layer2.{k}": v for k, v in g2.items()})
    grads.update({f"layer1.{k}": v for k, v in g1.items()})
    return {k: grads[k] for k in model.arrays()}


def truncate(model: ModelParams, cells: int) -> ModelParams:
    """The same network unrolled over only the first ``cells`` sub-segments."""
    if not 1 <= cells <= model.n_cells:
        raise ValueError(f"cannot truncate a {model.n_cells}-cell model to {cells} cells")
    out = model.copy()
    out.n_cells = cells
    if not model.shared_head:
        out.head_W = out.head_W[:cells].copy()
        out.head_b = out.head_b[:cells].copy()
    out.validate()
    return out
