"""How soon after a lane change does the model notice?

Drives are stitched from aligned lane recordings so the car hops lanes every
8000 samples.  Two models are trained, one on most-frequent labels and one
on latest-observed labels, and each window after a switch is scored.
Takes about a minute on one CPU core.
"""

from lanesig import desk
from lanesig.eval import window_accuracy
from lanesig.nnet.train import train

cfg = desk.DeskConfig().with_seed(1)
train_cfg = desk.TrainConfig(batch_size=64, max_epochs=12, patience=1, loss_mode="uniform", seed=1)

for policy in ("MF", "LO"):
    data = desk.lane_change_datasets(cfg, alpha=8_000, policy=policy)
    model, _ = train(desk.new_model(cfg, loss_mode="uniform"), data["train"], data["val"], train_cfg)
    report = window_accuracy(model, data["test"])
    print(f"{policy} labels, {len(report.events)} lane changes in the test drives")
    for ordinal, (acc, n) in report.by_ordinal().items():
        print(f"  window {ordinal}: accuracy {acc:.2f} over {n}")
