"""Adam training with early stopping on validation accuracy."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from lanesig.nnet.model import LossMode, ModelParams, backward, forward, loss, pool_cells
from lanesig.pipeline import make_subdrives

log = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    """Raised when a batch produces a non-finite loss."""


@dataclass
class TrainConfig:
    learning_rate: float = 0.005
    batch_size: int = 512
    max_epochs: int = 4
    loss_mode: LossMode = LossMode.WEIGHTED
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    precision: str = "float32"
    patience: int = 1
    clip_norm: float | None = 5.0
    restore_best: bool = True

    def __post_init__(self):
        self.loss_mode = LossMode.parse(self.loss_mode)
        if not self.learning_rate >= 0:
            raise ValueError("learning_rate must be non-negative")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("Adam betas must lie in (0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.precision not in ("float32", "float64"):
            raise ValueError(f"precision must be float32 or float64, got {self.precision}")

    @property
    def dtype(self):
        return np.dtype(self.precision)


@dataclass
class CellDataset:
    """Pooled cell inputs ``X (N, n, D)`` with per-cell lane targets ``Y (N, n)``."""

    X: np.ndarray
    Y: np.ndarray
    meta: list = field(default_factory=list)

    def __post_init__(self):
        self.Y = np.asarray(self.Y, dtype=np.int64)
        if self.Y.ndim == 1:
            self.Y = np.repeat(self.Y[:, None], self.X.shape[1], axis=1)
        if self.X.ndim != 3 or self.Y.shape != self.X.shape[:2]:
            raise ValueError(f"inconsistent dataset shapes X{self.X.shape} Y{self.Y.shape}")

    def __len__(self) -> int:
        return self.X.shape[0]

    def subset(self, idx) -> "CellDataset":
        meta = [self.meta[i] for i in idx] if self.meta else []
        return CellDataset(self.X[idx], self.Y[idx], meta)

    @classmethod
    def concat(cls, parts) -> "CellDataset":
        parts = [p for p in parts if len(p)]
        return cls(np.concatenate([p.X for p in parts]), np.concatenate([p.Y for p in parts]),
                   [m for p in parts for m in p.meta])


def cell_dataset(drives, seg, pool_kernel: int, pool_stride: int, policy="LO",
                 dtype=np.float32) -> CellDataset:
    """Segment, label and pool drives into a ``CellDataset``."""
    X, Y, meta = [], [], []
    for drive in drives:
        subs = make_subdrives(drive, seg.ell, seg.s, d=seg.d, policy=policy)
        raw = np.stack([s.samples for s in subs])
        X.append(pool_cells(raw, seg.d, pool_kernel, pool_stride, dtype))
        Y.extend(s.cell_targets for s in subs)
        meta.extend({"drive_id": drive.drive_id, "origin_id": drive.origin_id,
                     "offset": s.start_offset, "pad_len": s.pad_len,
                     "segments": drive.segments, "length": len(drive)} for s in subs)
    if not X:
        raise ValueError("no drives to segment")
    return CellDataset(np.concatenate(X), np.array(Y), meta)


@dataclass
class AdamState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0

    @classmethod
    def zeros(cls, model: ModelParams) -> "AdamState":
        arrays = model.arrays()
        return cls({k: np.zeros_like(a) for k, a in arrays.items()},
                   {k: np.zeros_like(a) for k, a in arrays.items()})


def clip_by_global_norm(grads: dict[str, np.ndarray], max_norm: float | None):
    norm = float(np.sqrt(sum(float((g.astype(np.float64) ** 2).sum()) for g in grads.values())))
    if max_norm is None or norm <= max_norm:
        return grads, norm, False
    factor = max_norm / norm
    return {k: g * g.dtype.type(factor) for k, g in grads.items()}, norm, True


def train_step(model: ModelParams, X, Y, state: AdamState, config: TrainConfig):
    """One Adam update on a batch.  Mutates ``model`` and ``state`` in place.

    Returns ``(batch_loss, batch_accuracy, grad_norm, clipped)``; accuracy is
    that of the final cell.
    """
    if len(X) == 0:
        raise ValueError("empty batch")
    out = forward(model, X, keep_cache=True)
    value = loss(out, Y, config.loss_mode)
    if not np.isfinite(value):
        raise TrainingDiverged(f"non-finite loss {value} at step {state.step + 1}")
    grads = backward(model, out, Y, config.loss_mode)
    grads, norm, clipped = clip_by_global_norm(grads, config.clip_norm)
    state.step += 1
    b1, b2 = config.beta1, config.beta2
    lr_t = config.learning_rate * np.sqrt(1 - b2 ** state.step) / (1 - b1 ** state.step)
    for name, param in model.arrays().items():
        g = grads[name]
        m, v = state.m[name], state.v[name]
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        param -= (lr_t * m / (np.sqrt(v) + config.eps)).astype(param.dtype, copy=False)
    Yc = np.asarray(Y)
    last = Yc[:, -1] if Yc.ndim == 2 else Yc
    acc = float(np.mean(out.final == last))
    return value, acc, norm, clipped


def evaluate_accuracy(model: ModelParams, data: CellDataset, *, batch_size: int = 1024,
                      per_cell: bool = False):
    """Final-cell accuracy, or the per-cell accuracy vector with ``per_cell``."""
    correct = np.zeros(data.X.shape[1])
    for lo in range(0, len(data), batch_size):
        pred = forward(model, data.X[lo:lo + batch_size]).predictions
        correct += (pred == data.Y[lo:lo + batch_size]).sum(axis=0)
    acc = correct / max(1, len(data))
    return acc if per_cell else float(acc[-1])


def _validation_score(model, data, mode: LossMode) -> float:
    accs = evaluate_accuracy(model, data, per_cell=True)
    # lane-change training cares about every cell, not only the last
    return float(accs.mean()) if mode is LossMode.UNIFORM else float(accs[-1])


def train(model: ModelParams, train_set: CellDataset, val_set: CellDataset | None,
          config: TrainConfig, *, early_stop: bool = True):
    """Epoch loop with seeded reshuffling.

    Training stops once validation accuracy has failed to beat its best for
    ``config.patience`` consecutive epochs; with ``restore_best`` the best
    parameters seen are returned.  History rows hold train loss/accuracy
    (batch means over the epoch), validation accuracy, clip count and time.
    """
    model = model.astype(config.dtype)
    model.loss_mode = config.loss_mode
    history: list[dict] = []
    if config.max_epochs <= 0:
        return model, history
    X = train_set.X.astype(config.dtype, copy=False)
    state = AdamState.zeros(model)
    rng = np.random.default_rng(config.seed)
    best, best_score, bad = model.copy(), -np.inf, 0
    for epoch in range(1, config.max_epochs + 1):
        t0 = time.perf_counter()
        order = rng.permutation(len(train_set))
        losses, accs, sizes, clips = [], [], [], 0
        for lo in range(0, len(order), config.batch_size):
            idx = np.sort(order[lo:lo + config.batch_size])
            value, acc, _, clipped = train_step(model, X[idx], train_set.Y[idx], state, config)
            losses.append(value)
            accs.append(acc)
            sizes.append(idx.size)
            clips += clipped
        row = {
            "epoch": epoch,
            "train_loss": float(np.average(losses, weights=sizes)),
            "train_acc": float(np.average(accs, weights=sizes)),
            "val_acc": float("nan"),
            "clipped_steps": clips,
            "clip_norm": config.clip_norm,
            "seconds": time.perf_counter() - t0,
        }
        if val_set is not None and len(val_set):
            row["val_acc"] = _validation_score(model, val_set, config.loss_mode)
        history.append(row)
        log.info("epoch %d loss %.4f acc %.4f val %.4f", epoch, row["train_loss"],
                 row["train_acc"], row["val_acc"])
        if val_set is None or not len(val_set):
            best = model
            continue
        if row["val_acc"] > best_score:
            best, best_score, bad = model.copy(), row["val_acc"], 0
        else:
            bad += 1
            if early_stop and bad >= config.patience:
                break
    return (best if config.restore_best else model), history
