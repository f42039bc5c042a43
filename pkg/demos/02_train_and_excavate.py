"""Train the two-lane desk model and look at accuracy cell by cell.

Later cells have heard more of the road, so they should be at least as sure
as early ones.  The script also round-trips the model through a checkpoint
and shows that a truncated model is just the early cells of the full one.
Takes under a minute on one CPU core.
"""

import tempfile
from pathlib import Path

import numpy as np

from lanesig import desk
from lanesig.eval import roc_f1
from lanesig.nnet import checkpoint
from lanesig.nnet.model import forward, truncate
from lanesig.nnet.train import evaluate_accuracy, train

cfg = desk.DeskConfig().with_seed(0)
data = desk.lane_datasets(cfg)
print({k: len(v) for k, v in data.items()}, "sub-drives per split")

model, history = train(desk.new_model(cfg), data["train"], data["val"], desk.DESK_TRAIN)
for row in history:
    print(f"epoch {row['epoch']}: loss {row['train_loss']:.3f}, train {row['train_acc']:.3f},"
          f" val {row['val_acc']:.3f}")

acc = evaluate_accuracy(model, data["test"], per_cell=True)
lengths = [cfg.seg.d + i * cfg.seg.m for i in range(cfg.seg.n_cells)]
print("test accuracy by samples heard:")
for n, a in zip(lengths, acc):
    print(f"  {n:>6}  {a:.3f}")

report = roc_f1(model, data["test"])
print(f"weighted F1 {report.weighted_f1:.3f}, AUC per lane {np.round(report.auc, 4).tolist()}")

with tempfile.TemporaryDirectory() as tmp:
    size = checkpoint.save(model, Path(tmp) / "m.lnet")
    back = checkpoint.load(Path(tmp) / "m.lnet")
X = data["test"].X[:50]
print(f"checkpoint {size} bytes, identical outputs: "
      f"{np.array_equal(forward(model, X).probs, forward(back, X).probs)}")

short = truncate(model, 3)
print("3-cell model matches cell 3:",
      np.array_equal(forward(short, X[:, :3]).probs[:, -1], forward(model, X).probs[:, 2]))
