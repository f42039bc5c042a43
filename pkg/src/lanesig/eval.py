"""Evaluation: per-cell accuracy matrices, lane-change classification
windows, and one-vs-rest ROC with weighted F1.

A *window* for a drive segment is any cell whose last sample falls inside
that segment; its distance is the number of samples from the segment start
to the end of the cell.  Cells sit on the drive-wide grid ``[k*m, k*m + d)``.
"""

from __future__ import annotations

import csv
import json
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
from sklearn.metrics import auc, f1_score, roc_curve

from lanesig.drive import Drive
from lanesig.nnet.lstm import avg_pool
from lanesig.nnet.model import ModelParams, forward, truncate
from lanesig.nnet.train import CellDataset
from lanesig.pipeline import LabelPolicy, label_span, make_subsegments


@dataclass(frozen=True)
class Window:
    segment: int
    lane: int
    cell: int
    start: int  # first sample of the cell
    end: int  # one past its last sample
    distance: int
    ordinal: int  # 1 for the earliest window of the segment


def drive_cell_count(total_len: int, d: int, m: int) -> int:
    return 0 if total_len < d else (total_len - d) // m + 1


def enumerate_windows(segments, d: int, m: int, total_len: int) -> list[list[Window]]:
    """Windows of every segment, in segment order."""
    segments = [(int(a), int(b)) for a, b in getattr(segments, "segments", segments)]
    starts = np.array([a for a, _ in segments])
    out: list[list[Window]] = [[] for _ in segments]
    for k in range(drive_cell_count(total_len, d, m)):
        a, b = k * m, k * m + d
        seg = int(np.searchsorted(starts, b - 1, side="right")) - 1
        ws = out[seg]
        ws.append(Window(seg, segments[seg][1], k, a, b, b - segments[seg][0], len(ws) + 1))
    return out


Predictor = Callable[[Drive, np.ndarray], np.ndarray]


def drive_cell_outputs(model: ModelParams, drive: Drive, *, batch_size: int = 256) -> np.ndarray:
    """Lane probabilities for every cell on the drive grid, ``(K, n_lanes)``.

    Cell ``k`` is scored by the most recent sub-drive ending with it, as a
    vehicle would in deployment.  Cells before the first full sub-drive are
    read off the intermediate outputs of the sub-drive at offset 0, which
    prefix causality makes identical to a truncated model.
    """
    d, n = model.cell_length, model.n_cells
    K = drive_cell_count(len(drive), d, d // 2)
    if K == 0:
        return np.empty((0, model.n_lanes))
    x = np.asarray(drive.samples)[: (K - 1) * (d // 2) + d]
    pooled = avg_pool(make_subsegments(x, d), model.pool_kernel, model.pool_stride).astype(model.dtype)
    probs = np.empty((K, model.n_lanes), dtype=model.dtype)
    head = min(n, K)
    probs[:head] = forward(truncate(model, head), pooled[None, :head]).probs[0]
    if K > n:
        seqs = np.lib.stride_tricks.sliding_window_view(pooled, n, axis=0).transpose(0, 2, 1)
        seqs = seqs[1:]  # sequence j ends with cell j + n
        for lo in range(0, len(seqs), batch_size):
            probs[n + lo:n + lo + batch_size] = forward(model, seqs[lo:lo + batch_size]).probs[:, -1]
    return probs


def model_predictor(model: ModelParams) -> Predictor:
    def predict(drive: Drive, spans: np.ndarray) -> np.ndarray:
        return drive_cell_outputs(model, drive).argmax(axis=1)
    return predict


def oracle_predictor(policy="LO") -> Predictor:
    """Predicts each span's ground truth; useful as a reference."""
    policy = LabelPolicy.parse(policy)

    def predict(drive: Drive, spans: np.ndarray) -> np.ndarray:
        return np.array([label_span(drive.segments, a, b, policy) for a, b in spans], dtype=int)
    return predict


@dataclass
class WindowReport:
    d: int
    m: int
    events: list[dict] = field(default_factory=list)

    def _windows(self):
        for ev in self.events:
            yield from ev["windows"]

    def by_ordinal(self) -> dict[int, tuple[float, int]]:
        """Accuracy and count of the 1st, 2nd, ... window after a switch."""
        hits: dict[int, list[bool]] = defaultdict(list)
        for w in self._windows():
            hits[w["ordinal"]].append(w["correct"])
        return {k: (float(np.mean(v)), len(v)) for k, v in sorted(hits.items())}

    def by_first_distance(self) -> dict[int, dict[int, tuple[float, int]]]:
        """Per first-window distance: accuracy by ordinal for those events."""
        groups: dict[int, dict[int, list[bool]]] = defaultdict(lambda: defaultdict(list))
        for ev in self.events:
            if not ev["windows"]:
                continue
            g = groups[ev["windows"][0]["distance"]]
            for w in ev["windows"]:
                g[w["ordinal"]].append(w["correct"])
        return {dist: {k: (float(np.mean(v)), len(v)) for k, v in sorted(g.items())}
                for dist, g in sorted(groups.items())}

    def accuracy(self, ordinal: int) -> float:
        acc = self.by_ordinal().get(ordinal)
        return float("nan") if acc is None else acc[0]

    def overall(self) -> float:
        hits = [w["correct"] for w in self._windows()]
        return float(np.mean(hits)) if hits else float("nan")

    def to_dict(self) -> dict:
        return {
            "d": self.d, "m": self.m, "events": self.events,
            "by_ordinal": {str(k): {"accuracy": a, "count": c} for k, (a, c) in self.by_ordinal().items()},
            "by_first_distance": {
                str(dist): {str(k): {"accuracy": a, "count": c} for k, (a, c) in g.items()}
                for dist, g in self.by_first_distance().items()},
        }


def window_accuracy(model, drives: Sequence[Drive], *, d: int | None = None,
                    include_first_segment: bool = False) -> WindowReport:
    """Score every classification window after each lane switch.

    ``model`` is a ``ModelParams`` or a predictor ``f(drive, spans) -> lanes``.
    A window is correct when the predicted lane is the segment's lane.  The
    opening segment of a drive is not a lane change and is skipped unless
    ``include_first_segment``.
    """
    if isinstance(model, ModelParams):
        d = model.cell_length
        predict = model_predictor(model)
    elif d is None:
        raise ValueError("a predictor function needs the cell length d")
    else:
        predict = model
    m = d // 2
    report = WindowReport(d, m)
    for drive in drives:
        K = drive_cell_count(len(drive), d, m)
        spans = np.array([(k * m, k * m + d) for k in range(K)]).reshape(-1, 2)
        pred = np.asarray(predict(drive, spans))
        for seg, ws in enumerate(enumerate_windows(drive.segments, d, m, len(drive))):
            if seg == 0 and not include_first_segment:
                continue
            lane = drive.segments[seg][1]
            report.events.append({
                "drive_id": drive.drive_id, "segment": seg, "lane": int(lane),
                "segment_start": int(drive.segments[seg][0]),
                "windows": [{"cell": w.cell, "distance": w.distance, "ordinal": w.ordinal,
                             "predicted": int(pred[w.cell]), "correct": bool(pred[w.cell] == lane)}
                            for w in ws],
            })
    return report


@dataclass
class MatrixRow:
    ell: int
    lengths: list[int]  # accumulated samples at each cell, d + i*m
    mean: list[float]
    var: list[float]


@dataclass
class AccuracyMatrix:
    rows: dict[int, MatrixRow] = field(default_factory=dict)

    def lengths(self) -> list[int]:
        return sorted({x for r in self.rows.values() for x in r.lengths})


def batch_cell_accuracy(model: ModelParams, data: CellDataset, batch_size: int = 512):
    """Per-cell mean and variance of per-batch accuracy against the target."""
    if len(data) == 0:
        raise ValueError("empty test set")
    accs = []
    for lo in range(0, len(data), batch_size):
        pred = forward(model, data.X[lo:lo + batch_size]).predictions
        accs.append((pred == data.Y[lo:lo + batch_size]).mean(axis=0))
    accs = np.array(accs)
    return accs.mean(axis=0), accs.var(axis=0)


def _check_single_label(data: CellDataset):
    if np.any(data.Y != data.Y[:, :1]):
        raise ValueError("accuracy matrices need single-lane sub-drives")


def excavate(model: ModelParams, data: CellDataset, batch_size: int = 512) -> MatrixRow:
    """One row read from the intermediate cells of a single model."""
    _check_single_label(data)
    d = model.cell_length
    mean, var = batch_cell_accuracy(model, data, batch_size)
    lengths = [d + i * (d // 2) for i in range(model.n_cells)]
    return MatrixRow(model.subdrive_length, lengths, mean.tolist(), var.tolist())


def accuracy_matrix(entries: Mapping[int, tuple[ModelParams, CellDataset]] | tuple,
                    batch_size: int = 512) -> AccuracyMatrix:
    """Rows of per-cell test accuracy.

    ``entries`` maps each trained ``ell`` to ``(model, test_set)`` (one model
    per row).  Passing a single ``(model, test_set)`` instead excavates every
    shorter ``ell`` from that model's intermediate cells, so row ``ell`` is
    the first ``n(ell)`` columns of the longest row.
    """
    out = AccuracyMatrix()
    if isinstance(entries, tuple):
        model, data = entries
        full = excavate(model, data, batch_size)
        for i in range(1, model.n_cells + 1):
            ell = full.lengths[i - 1]
            out.rows[ell] = MatrixRow(ell, full.lengths[:i], full.mean[:i], full.var[:i])
        return out
    for ell, (model, data) in sorted(entries.items()):
        row = excavate(model, data, batch_size)
        if row.ell != ell:
            raise ValueError(f"model for ell={ell} unrolls over {row.ell} samples")
        out.rows[ell] = row
    return out


@dataclass
class RocReport:
    classes: list[int]
    support: list[int]
    fpr: list[list[float] | None]
    tpr: list[list[float] | None]
    auc: list[float | None]  # None when a class has no positives or no negatives
    f1: list[float]
    weighted_f1: float

    def to_dict(self) -> dict:
        return asdict(self)


def roc_f1_scores(y_true, scores) -> RocReport:
    """One-vs-rest ROC (trapezoidal AUC) per lane plus support-weighted F1."""
    y = np.asarray(y_true, dtype=int)
    P = np.asarray(scores, dtype=float)
    if P.ndim != 2 or len(P) != len(y):
        raise ValueError("scores must be (N, n_lanes) matching the labels")
    L = P.shape[1]
    if L < 2:
        raise ValueError("need at least two lanes")
    classes = list(range(L))
    pred = P.argmax(axis=1)
    fpr, tpr, aucs = [], [], []
    for c in classes:
        pos = y == c
        if pos.all() or not pos.any():
            fpr.append(None), tpr.append(None), aucs.append(None)
            continue
        f, t, _ = roc_curve(pos, P[:, c])
        fpr.append(f.tolist()), tpr.append(t.tolist()), aucs.append(float(auc(f, t)))
    f1 = f1_score(y, pred, labels=classes, average=None, zero_division=0.0)
    wf1 = f1_score(y, pred, labels=classes, average="weighted", zero_division=0.0)
    support = np.bincount(y, minlength=L)
    return RocReport(classes, support.tolist(), fpr, tpr, aucs, f1.tolist(), float(wf1))


def roc_f1(model: ModelParams, data: CellDataset, *, cell: int = -1, batch_size: int = 1024) -> RocReport:
    probs = np.concatenate([forward(model, data.X[lo:lo + batch_size]).probs[:, cell]
                            for lo in range(0, len(data), batch_size)])
    return roc_f1_scores(data.Y[:, cell], probs)


def _g(x) -> str:
    return f"{x:.6g}"


def write_matrix_csv(matrix: AccuracyMatrix, path) -> list[Path]:
    """Means to ``path`` and variances to ``<stem>_var.csv`` beside it."""
    path = Path(path)
    lengths = matrix.lengths()
    written = []
    for stat, target in (("mean", path), ("var", path.with_name(path.stem + "_var.csv"))):
        with open(target, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["ell"] + lengths)
            for ell, row in sorted(matrix.rows.items()):
                vals = dict(zip(row.lengths, getattr(row, stat)))
                w.writerow([ell] + [_g(vals[x]) if x in vals else "" for x in lengths])
        written.append(target)
    return written


def _rounded(obj):
    if isinstance(obj, float):
        return float(_g(obj))
    if isinstance(obj, dict):
        return {k: _rounded(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_rounded(v) for v in obj]
    return obj


def write_json(report, path) -> Path:
    data = report.to_dict() if hasattr(report, "to_dict") else report
    Path(path).write_text(json.dumps(_rounded(data), indent=1) + "\n")
    return Path(path)


def write_gnuplot(report, path) -> Path:
    """Whitespace-separated data blocks, one per curve, for gnuplot ``index``."""
    path = Path(path)
    lines = []
    if isinstance(report, RocReport):
        for c, f, t, a in zip(report.classes, report.fpr, report.tpr, report.auc):
            lines.append(f"# lane {c} auc {'undefined' if a is None else _g(a)}")
            lines += [f"{_g(x)} {_g(y)}" for x, y in zip(f or [], t or [])]
            lines += ["", ""]
    elif isinstance(report, WindowReport):
        for dist, g in report.by_first_distance().items():
            lines.append(f"# first window distance {dist}: ordinal accuracy count")
            lines += [f"{k} {_g(a)} {c}" for k, (a, c) in g.items()]
            lines += ["", ""]
    elif isinstance(report, AccuracyMatrix):
        for ell, row in sorted(report.rows.items()):
            lines.append(f"# ell {ell}: accumulated_length mean var")
            lines += [f"{x} {_g(a)} {_g(v)}" for x, a, v in zip(row.lengths, row.mean, row.var)]
            lines += ["", ""]
    else:
        raise TypeError(f"cannot plot {type(report).__name__}")
    path.write_text("\n".join(lines) + "\n")
    return path
