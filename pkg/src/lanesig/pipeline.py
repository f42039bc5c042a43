"""Preprocessing, segmentation into sub-drives and cells, lane-change
stitching and per-cell ground truth.

Index conventions: every length and offset is in samples.  A sub-drive of
length ``ell`` is cut into ``n = (ell - d) / m + 1`` cells of length ``d``
with stride ``m = d / 2``; cell ``i`` (0-based) covers ``[i*m, i*m + d)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from lanesig.drive import Drive

MAD_SCALE = 1.4826


class LabelPolicy(str, Enum):
    MF = "MF"  # most frequent lane in the cell, ties to the more recent lane
    LO = "LO"  # lane of the cell's last sample

    @classmethod
    def parse(cls, value) -> "LabelPolicy":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(f"unknown label policy {value!r}") from None


@dataclass(frozen=True)
class SegmentationConfig:
    ell: int
    s: int
    d: int

    def __post_init__(self):
        if self.d < 2 or self.d % 2:
            raise ValueError(f"cell length d must be even and >= 2, got {self.d}")
        if self.ell < self.d:
            raise ValueError(f"sub-drive length {self.ell} shorter than cell length {self.d}")
        if self.s < 1:
            raise ValueError("sub-drive stride must be >= 1")
        if (self.ell - self.d) % self.m:
            raise ValueError(f"(ell - d) = {self.ell - self.d} is not a multiple of m = {self.m}")

    @property
    def m(self) -> int:
        return self.d // 2

    @property
    def n_cells(self) -> int:
        return (self.ell - self.d) // self.m + 1

    def cell_span(self, i: int) -> tuple[int, int]:
        """Sample span ``[a, b)`` of 0-based cell ``i`` within the sub-drive."""
        return i * self.m, i * self.m + self.d

    def accumulated_lengths(self) -> list[int]:
        """Samples seen up to and including each cell: ``d + i*m``."""
        return [self.d + i * self.m for i in range(self.n_cells)]


#: Layout of the per-cell accuracy tables: d = 50K, cell stride 25K.
def table_layout(ell: int = 800_000) -> SegmentationConfig:
    return SegmentationConfig(ell=ell, s=25_000, d=50_000)


#: Short sub-drive preset (ell <= 200K), sub-drive stride 10K.
def short_layout(ell: int = 200_000) -> SegmentationConfig:
    return SegmentationConfig(ell=ell, s=10_000, d=50_000)


@dataclass
class SubDrive:
    samples: np.ndarray
    source_drive_id: str
    start_offset: int
    pad_len: int
    cell_targets: tuple[int, ...] = ()
    segments: tuple[tuple[int, int], ...] = ()
    origin_id: str = ""

    @property
    def real_len(self) -> int:
        return len(self.samples) - self.pad_len


def hampel(x: np.ndarray, window: int = 11, k: float = 3.0, chunk: int = 1 << 16):
    """Hampel filter.  Returns ``(filtered, replaced_mask)``.

    Each sample deviating from its centred window median by more than
    ``k * 1.4826 * MAD`` is replaced by that median.  Windows at the edges
    use edge-replicated padding.
    """
    if window < 3 or window % 2 == 0:
        raise ValueError(f"hampel window must be odd and >= 3, got {window}")
    x = np.asarray(x, dtype=float)
    half = window // 2
    padded = np.pad(x, half, mode="edge")
    med = np.empty_like(x)
    mad = np.empty_like(x)
    for lo in range(0, x.size, chunk):
        hi = min(lo + chunk, x.size)
        w = sliding_window_view(padded[lo:hi + 2 * half], window)
        med[lo:hi] = np.median(w, axis=1)
        mad[lo:hi] = np.median(np.abs(w - med[lo:hi, None]), axis=1)
    replace = np.abs(x - med) > k * MAD_SCALE * mad
    return np.where(replace, med, x), replace


def preprocess(drive: Drive, hampel_window: int = 11, hampel_k: float = 3.0) -> Drive:
    """Per-drive z-score normalisation followed by a Hampel filter."""
    x = np.asarray(drive.samples, dtype=float)
    std = x.std()
    step = {"kind": "preprocessed", "hampel_window": hampel_window, "hampel_k": hampel_k}
    if std == 0 or not np.isfinite(std):
        warnings.warn(f"drive {drive.drive_id!r} is constant; preprocessing yields zeros",
                      RuntimeWarning, stacklevel=2)
        out = drive.derive(np.zeros_like(x), step)
        out.flags["constant"] = True
        return out
    z = (x - x.mean()) / std
    filtered, replaced = hampel(z, hampel_window, hampel_k)
    out = drive.derive(filtered, step)
    out.flags["hampel_replaced"] = int(replaced.sum())
    return out


def n_subdrives(length: int, ell: int, s: int) -> int:
    return 1 + max(0, math.ceil((length - ell) / s))


def make_subdrives(drive: Drive, ell: int, s: int, *, d: int | None = None,
                   policy="LO") -> list[SubDrive]:
    """Slide a window of ``ell`` samples with stride ``s``; zero-pad the last.

    With ``d`` given, each sub-drive also carries its per-cell lane targets.
    """
    if ell < 1 or s < 1:
        raise ValueError("ell and s must be >= 1")
    x = np.asarray(drive.samples)
    out = []
    for k in range(n_subdrives(len(x), ell, s)):
        start = k * s
        window = x[start:start + ell]
        pad = ell - window.size
        if pad:
            window = np.concatenate([window, np.zeros(pad, dtype=x.dtype)])
        out.append(_subdrive(drive, window, start, pad, ell, d, policy))
    return out


def random_subdrive_sample(drive: Drive, ell: int, seed: int, *, d: int | None = None,
                           policy="LO") -> SubDrive:
    """An ``ell``-sample window at a uniformly random offset."""
    n = len(drive)
    if n < ell:
        raise ValueError(f"drive of {n} samples is shorter than ell = {ell}")
    start = int(np.random.default_rng(seed).integers(0, n - ell + 1))
    return _subdrive(drive, np.asarray(drive.samples[start:start + ell]), start, 0, ell, d, policy)


def _subdrive(drive, window, start, pad, ell, d, policy) -> SubDrive:
    segs = relative_segments(drive.segments, start, min(ell, len(drive) - start))
    targets: tuple[int, ...] = ()
    if d is not None:
        cfg = SegmentationConfig(ell=ell, s=1, d=d)
        targets = tuple(label_cells(drive.segments, cfg, start, policy, length=len(drive)))
    return SubDrive(samples=window, source_drive_id=drive.drive_id, start_offset=start,
                    pad_len=pad, cell_targets=targets, segments=segs, origin_id=drive.origin_id)


def relative_segments(segments, offset: int, length: int) -> tuple[tuple[int, int], ...]:
    """Segments clipped to ``[offset, offset + length)`` and re-based to 0."""
    starts = [s for s, _ in segments]
    first = int(np.searchsorted(starts, offset, side="right")) - 1
    out = [(0, segments[first][1])]
    for s, lane in segments[first + 1:]:
        if s >= offset + length:
            break
        out.append((s - offset, lane))
    return tuple(out)


def make_subsegments(subdrive, d: int) -> np.ndarray:
    """The ``n`` half-overlapping cells of a sub-drive as an ``(n, d)`` view."""
    x = np.asarray(getattr(subdrive, "samples", subdrive))
    if d < 2 or d % 2:
        raise ValueError(f"cell length d must be even and >= 2, got {d}")
    m = d // 2
    if x.size < d or (x.size - d) % m:
        raise ValueError(f"sub-drive length {x.size} incompatible with d={d}, m={m}")
    return sliding_window_view(x, d)[::m]


def stitch_lane_changes(lane_drives: Sequence[Drive], alpha: int, start_lane: int) -> Drive:
    """Alternate between position-aligned lane drives every ``alpha`` samples.

    Output sample ``j`` is sample ``j`` of whichever drive is active, so a
    switch continues at the same place on the road in the new lane.  With more
    than two drives the lanes are cycled in the order given.
    """
    if len(lane_drives) < 2:
        raise ValueError("stitching needs at least two lane drives")
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    rates = {d.sample_rate_hz for d in lane_drives}
    if len(rates) != 1:
        raise ValueError(f"lane drives have mismatched sample rates {sorted(rates)}")
    lanes = [d.lane for d in lane_drives]
    if None in lanes:
        raise ValueError("stitching inputs must be single-lane drives")
    if start_lane not in lanes:
        raise ValueError(f"start lane {start_lane} not among {lanes}")
    first = lanes.index(start_lane)
    length = min(len(d) for d in lane_drives)
    out = np.empty(length, dtype=np.result_type(*[d.samples for d in lane_drives]))
    segments = []
    for k, start in enumerate(range(0, length, alpha)):
        src = lane_drives[(first + k) % len(lane_drives)]
        out[start:start + alpha] = src.samples[start:start + alpha]
        segments.append((start, src.lane))
    base = lane_drives[first]
    return Drive(
        samples=out,
        sample_rate_hz=base.sample_rate_hz,
        segments=tuple(segments),
        provenance=({"kind": "stitched", "alpha": int(alpha), "start_lane": int(start_lane),
                     "sources": [d.drive_id for d in lane_drives]},),
        seed=base.seed,
        drive_id=f"stitch-a{alpha}-l{start_lane}-" + "+".join(d.drive_id for d in lane_drives),
        origin_id="+".join(sorted({d.origin_id for d in lane_drives})),
    )


def label_span(segments, a: int, b: int, policy) -> int:
    """Ground-truth lane for samples ``[a, b)`` under ``policy``."""
    policy = LabelPolicy.parse(policy)
    if b <= a:
        raise ValueError(f"empty span [{a}, {b})")
    starts = [s for s, _ in segments]
    if a < 0:
        raise ValueError(f"span start {a} is negative")
    last = int(np.searchsorted(starts, b - 1, side="right")) - 1
    if policy is LabelPolicy.LO:
        return segments[last][1]
    first = int(np.searchsorted(starts, a, side="right")) - 1
    counts: dict[int, int] = {}
    recency: dict[int, int] = {}
    for j in range(first, last + 1):
        lo = max(a, segments[j][0])
        hi = b if j == last else min(b, segments[j + 1][0])
        lane = segments[j][1]
        counts[lane] = counts.get(lane, 0) + (hi - lo)
        recency[lane] = j
    return max(counts, key=lambda lane: (counts[lane], recency[lane]))


def label_cells(segments, config: SegmentationConfig, offset: int, policy, *,
                length: int | None = None) -> list[int]:
    """Per-cell targets for the sub-drive starting at ``offset``.

    ``length`` is the real (unpadded) drive length; cell spans running into the
    zero-padded tail are clipped to real samples.
    """
    if isinstance(segments, Drive):
        length = len(segments) if length is None else length
        segments = segments.segments
    if length is None:
        raise ValueError("drive length required to bound the labelled region")
    if not 0 <= offset < length:
        raise ValueError(f"sub-drive offset {offset} outside labelled region [0, {length})")
    labels = []
    for i in range(config.n_cells):
        a, b = config.cell_span(i)
        a, b = offset + a, offset + b
        b = min(b, length)
        a = min(a, b - 1)
        labels.append(label_span(segments, a, b, policy))
    return labels


def make_batches(items, batch_size: int, seed: int) -> list:
    """Seeded shuffle of ``items`` cut into batches; the last may be short.

    ``items`` may be a sequence or an ``int`` count, in which case index
    arrays are returned.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    count = items if isinstance(items, (int, np.integer)) else len(items)
    order = np.random.default_rng(seed).permutation(count)
    chunks = [order[i:i + batch_size] for i in range(0, count, batch_size)]
    if isinstance(items, (int, np.integer)):
        return chunks
    return [[items[j] for j in chunk] for chunk in chunks]


def split_by_origin(drives: Sequence[Drive], test_frac: float = 0.2, seed: int = 0):
    """Train/test split that keeps every variant of an original drive together."""
    origins = sorted({d.origin_id for d in drives})
    rng = np.random.default_rng(seed)
    order = [origins[i] for i in rng.permutation(len(origins))]
    n_test = max(1, round(test_frac * len(origins))) if len(origins) > 1 else 0
    test_ids = set(order[:n_test])
    train = [d for d in drives if d.origin_id not in test_ids]
    test = [d for d in drives if d.origin_id in test_ids]
    return train, test
