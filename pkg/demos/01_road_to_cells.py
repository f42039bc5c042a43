"""From a simulated road to the per-cell inputs the model sees.

Run with ``python3 demos/01_road_to_cells.py``; it takes a few seconds.
"""

import numpy as np

from lanesig import desk
from lanesig.augment import iter_augmented
from lanesig.nnet.train import cell_dataset
from lanesig.pipeline import make_subdrives, preprocess

cfg = desk.DeskConfig(length_m=300.0, drives_per_lane=2)

# Each lane gets its own surface; lanes differ in where the wheel tracks dip.
surfaces = desk.lane_surfaces(cfg)
drives = desk.trip_drives(cfg, surfaces, trip=0)
print(f"{len(surfaces)} lane surfaces, {len(drives)} drives on trip 0")
for d in drives:
    print(f"  {d.drive_id}: lane {d.lane}, {len(d)} samples ({len(d) / d.sample_rate_hz:.1f} s)")

# Normalise and clip outliers before anything else.
clean = [preprocess(d) for d in drives]
x = clean[0].samples
print(f"after preprocessing: mean {x.mean():+.2e}, std {x.std():.3f}")

# Augmentation multiplies the training set; every variant records how it was made.
variants = list(iter_augmented(clean[:1], cfg.plan))
print(f"plan {cfg.plan.n_scale}/{cfg.plan.n_jitter}/{cfg.plan.n_warp} gives {len(variants)} drives per original:")
for v in variants[:4]:
    print("  ", [step["kind"] for step in v.provenance])

# Sub-drives slide over each drive; cells overlap by half their length.
seg = cfg.seg
subs = make_subdrives(clean[0], seg.ell, seg.s, d=seg.d)
print(f"ell={seg.ell}, s={seg.s}, d={seg.d}: {len(subs)} sub-drives of {seg.n_cells} cells,"
      f" last one padded by {subs[-1].pad_len} samples")

data = cell_dataset(clean, seg, cfg.pool_kernel, cfg.pool_stride)
print(f"pooled cell tensor {data.X.shape}, targets {data.Y.shape}, lanes {np.unique(data.Y).tolist()}")
