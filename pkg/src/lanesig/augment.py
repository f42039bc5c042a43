"""Scaling, jittering and time-warping of drives.

Amplitude-relative parameters are fractions of ``M``, the largest absolute
sample of the drive being augmented.
"""

from __future__ import annotations

import json
import math
import zlib
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from lanesig.drive import Drive

SCALE_SIGMA_LIMIT = 0.7
JITTER_SIGMA_LIMIT = 0.1
WARP_SPEED_LIMIT = 0.2


@dataclass(frozen=True)
class AugmentPlan:
    n_scale: int = 10
    scale_sigma_max_frac: float = 0.7
    n_jitter: int = 10
    jitter_sigma_max_frac: float = 0.1
    n_warp: int = 5
    warp_sections_range: tuple[int, int] = (3, 8)
    warp_speed_frac: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if min(self.n_scale, self.n_jitter, self.n_warp) < 0:
            raise ValueError("augmentation counts must be >= 0")
        for name in ("scale_sigma_max_frac", "jitter_sigma_max_frac", "warp_speed_frac"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {v}")
        lo, hi = self.warp_sections_range
        if not 1 <= lo <= hi:
            raise ValueError(f"bad warp_sections_range {self.warp_sections_range}")

    @property
    def variants_per_original(self) -> int:
        return (1 + self.n_scale) * (1 + self.n_jitter) * (1 + self.n_warp)


def _peak(drive: Drive) -> float:
    if len(drive.samples) == 0:
        raise ValueError("cannot augment an empty drive")
    return float(np.max(np.abs(drive.samples)))


def scale(drive: Drive, seed: int, sigma_frac: float) -> Drive:
    """Multiply by ``c = |N(1, sigma_frac * M)|``."""
    if not 0 <= sigma_frac <= SCALE_SIGMA_LIMIT:
        raise ValueError(f"scale sigma_frac must lie in [0, {SCALE_SIGMA_LIMIT}], got {sigma_frac}")
    peak = _peak(drive)
    c = abs(np.random.default_rng(seed).normal(1.0, sigma_frac * peak)) if sigma_frac else 1.0
    out = (drive.samples * c).astype(drive.samples.dtype, copy=False)
    return drive.derive(out, {"kind": "scaled", "seed": int(seed), "sigma_frac": float(sigma_frac),
                              "factor": float(c)}, seed=seed)


def jitter(drive: Drive, seed: int, sigma_frac: float) -> Drive:
    """Add white Gaussian noise with standard deviation ``sigma_frac * M``."""
    if not 0 <= sigma_frac <= JITTER_SIGMA_LIMIT:
        raise ValueError(f"jitter sigma_frac must lie in [0, {JITTER_SIGMA_LIMIT}], got {sigma_frac}")
    sigma = sigma_frac * _peak(drive)
    if sigma == 0:
        out = drive.samples.copy()
    else:
        noise = np.random.default_rng(seed).normal(0.0, sigma, len(drive))
        out = (drive.samples + noise).astype(drive.samples.dtype, copy=False)
    return drive.derive(out, {"kind": "jittered", "seed": int(seed), "sigma_frac": float(sigma_frac),
                              "sigma": float(sigma)}, seed=seed)


def warp_sections(x: np.ndarray, bounds: Sequence[int], rates: Sequence[float]):
    """Resample contiguous sections of ``x`` at the given rate ratios.

    ``bounds`` are the section starts (first is 0).  Section ``k`` of length
    ``L`` becomes ``round(L / r_k)`` samples read at source positions
    ``start + j * r_k``.  Sections shorter than 2 samples are copied as is.
    Returns ``(warped, source_positions, out_starts)``.
    """
    x = np.asarray(x)
    n = x.size
    ends = list(bounds[1:]) + [n]
    positions = []
    out_starts = []
    total = 0
    for a, b, r in zip(bounds, ends, rates):
        length = b - a
        out_starts.append(total)
        if length < 2 or r == 1.0:
            pos = np.arange(a, b, dtype=float)
        else:
            new_len = max(1, int(math.floor(length / r + 0.5)))
            pos = a + np.arange(new_len) * r
        positions.append(pos)
        total += pos.size
    src = np.concatenate(positions)
    warped = np.interp(src, np.arange(n), x).astype(x.dtype, copy=False)
    exact = src == np.floor(src)
    warped[exact] = x[src[exact].astype(np.int64)]
    return warped, src, out_starts


def time_warp(drive: Drive, seed: int, n_sections: int, speed_frac: float) -> Drive:
    """Emulate speed changes: stretch or compress random sections by up to ``speed_frac``."""
    if n_sections < 1:
        raise ValueError("n_sections must be >= 1")
    if not 0 <= speed_frac <= WARP_SPEED_LIMIT:
        raise ValueError(f"warp speed_frac must lie in [0, {WARP_SPEED_LIMIT}], got {speed_frac}")
    n = len(drive)
    rng = np.random.default_rng(seed)
    k = min(n_sections, n)
    cuts = np.sort(rng.choice(np.arange(1, n), size=k - 1, replace=False)) if k > 1 else []
    bounds = [0] + [int(c) for c in cuts]
    rates = rng.uniform(1.0 - speed_frac, 1.0 + speed_frac, size=k)
    ends = bounds[1:] + [n]
    rates = [1.0 if b - a < 2 else float(r) for a, b, r in zip(bounds, ends, rates)]
    warped, _, out_starts = warp_sections(drive.samples, bounds, rates)
    segments = _remap_segments(drive.segments, bounds, rates, out_starts, warped.size)
    step = {"kind": "warped", "seed": int(seed), "speed_frac": float(speed_frac),
            "bounds": bounds, "rates": [float(r) for r in rates]}
    return drive.derive(warped, step, seed=seed, segments=segments)


def _remap_segments(segments, bounds, rates, out_starts, out_len):
    remapped = [(0, segments[0][1])]
    for start, lane in segments[1:]:
        k = int(np.searchsorted(bounds, start, side="right")) - 1
        j = out_starts[k] + int(math.floor((start - bounds[k]) / rates[k] + 0.5))
        j = min(max(j, remapped[-1][0] + 1), out_len - 1)
        if j > remapped[-1][0]:
            remapped.append((j, lane))
    return tuple(remapped)


def variant_seed(plan_seed: int, original_id: str, *indices: int) -> int:
    """Seed for one variant, a pure function of its coordinates."""
    key = (zlib.crc32(original_id.encode()),) + tuple(int(i) for i in indices)
    return int(np.random.SeedSequence(plan_seed, spawn_key=key).generate_state(1)[0])


def iter_augmented(drives: Iterable[Drive], plan: AugmentPlan) -> Iterator[Drive]:
    """Yield each original followed by all of its variants.

    Per original: ``n_scale`` scaled copies, ``n_jitter`` jittered copies of
    the original and of each scaled copy, then ``n_warp`` warped copies of
    everything before.  Variant parameters (sigma fractions, section counts)
    are drawn from a stream seeded by the variant's coordinates.
    """
    for original in drives:
        oid = original.drive_id
        level1 = [(original, (0,))]
        for si in range(1, plan.n_scale + 1):
            seed = variant_seed(plan.seed, oid, si, 0, 0)
            frac = _draw_frac(seed, plan.scale_sigma_max_frac)
            v = scale(original, seed, frac)
            v.drive_id = f"{oid}/s{si}"
            level1.append((v, (si,)))
        level2 = []
        for base, (si,) in level1:
            level2.append((base, (si, 0)))
            for ji in range(1, plan.n_jitter + 1):
                seed = variant_seed(plan.seed, oid, si, ji, 0)
                frac = _draw_frac(seed, plan.jitter_sigma_max_frac)
                v = jitter(base, seed, frac)
                v.drive_id = f"{base.drive_id}/j{ji}"
                level2.append((v, (si, ji)))
        for base, (si, ji) in level2:
            yield base
            for wi in range(1, plan.n_warp + 1):
                seed = variant_seed(plan.seed, oid, si, ji, wi)
                lo, hi = plan.warp_sections_range
                sections = int(np.random.default_rng([seed, 1]).integers(lo, hi + 1))
                v = time_warp(base, seed, sections, plan.warp_speed_frac)
                v.drive_id = f"{base.drive_id}/w{wi}"
                yield v


def _draw_frac(seed: int, upper: float) -> float:
    # uniform on (0, upper]
    return float(upper * (1.0 - np.random.default_rng([seed, 0]).random()))


def augment_dataset(drives: Sequence[Drive], plan: AugmentPlan) -> list[Drive]:
    if not drives:
        raise ValueError("augment_dataset needs at least one drive")
    return list(iter_augmented(drives, plan))


MANIFEST_FORMAT = "lanesig-manifest v1"
SPLITS = ("train", "val", "test")


def manifest_entry(drive: Drive, path: str | None = None, split: str | None = None) -> dict:
    entry = {
        "drive_id": drive.drive_id,
        "origin_id": drive.origin_id,
        "seed": int(drive.seed),
        "length": len(drive),
        "sample_rate_hz": drive.sample_rate_hz,
        "segments": [list(s) for s in drive.segments],
        "provenance": _jsonable(list(drive.provenance)),
    }
    if path is not None:
        entry["path"] = str(path)
    if split is not None:
        entry["split"] = split
    return entry


def check_partition(origins: Sequence[str], splits: Sequence[str]) -> None:
    """Raise if any original drive has variants in more than one split."""
    seen: dict[str, str] = {}
    for origin, split in zip(origins, splits):
        if split not in SPLITS:
            raise ValueError(f"unknown split tag {split!r}; expected one of {SPLITS}")
        if seen.setdefault(origin, split) != split:
            raise ValueError(f"origin {origin!r} appears in both {seen[origin]} and {split}")


def write_manifest(path, drives: Iterable[Drive], plan: AugmentPlan | None = None,
                   paths: Sequence[str] | None = None, splits: Sequence[str] | None = None,
                   extra: dict | None = None) -> None:
    """JSON listing of drives with provenance, derived seeds and split tags.

    Split tags must partition the drives by origin, so no original and none
    of its variants can sit on both sides of a train/test boundary.
    """
    drives = list(drives)
    paths = paths or [None] * len(drives)
    if splits is not None:
        check_partition([d.origin_id for d in drives], splits)
    else:
        splits = [None] * len(drives)
    doc = {"format": MANIFEST_FORMAT,
           "plan": _jsonable(asdict(plan)) if plan else None,
           **_jsonable(extra or {}),
           "drives": [manifest_entry(d, p, t) for d, p, t in zip(drives, paths, splits)]}
    Path(path).write_text(json.dumps(doc, indent=1))


def read_manifest(path) -> dict:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != MANIFEST_FORMAT:
        raise ValueError(f"{path}: not a {MANIFEST_FORMAT} file")
    entries = doc["drives"]
    tagged = [e for e in entries if "split" in e]
    check_partition([e["origin_id"] for e in tagged], [e["split"] for e in tagged])
    return doc


def regenerate(original: Drive, provenance: Sequence[dict]) -> Drive:
    """Replay a manifest provenance chain on its original drive."""
    out = original
    for step in provenance:
        kind = step["kind"]
        if kind == "scaled":
            out = scale(out, step["seed"], step["sigma_frac"])
        elif kind == "jittered":
            out = jitter(out, step["seed"], step["sigma_frac"])
        elif kind == "warped":
            out = time_warp(out, step["seed"], len(step["bounds"]), step["speed_frac"])
    return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj
