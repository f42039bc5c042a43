"""The ``Drive`` record shared by every stage of the toolkit."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np


@dataclass
class Drive:
    """A z-axis acceleration trace with its lane labelling.

    ``segments`` is a tuple of ``(start_index, lane_id)`` pairs; the first
    starts at 0 and each segment runs until the next start (the last one until
    ``len(samples)``).  A drive that never changes lane has one segment.
    """

    samples: np.ndarray
    sample_rate_hz: float
    segments: tuple[tuple[int, int], ...]
    provenance: tuple[dict[str, Any], ...] = ({"kind": "original"},)
    seed: int = 0
    drive_id: str = ""
    origin_id: str = ""
    flags: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples)
        self.segments = tuple((int(i), int(lane)) for i, lane in self.segments)
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise ValueError("drive samples must be a nonempty 1-D sequence")
        if not self.sample_rate_hz > 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        validate_segments(self.segments, self.samples.size)
        if not self.origin_id:
            self.origin_id = self.drive_id

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def lane(self) -> int | None:
        """The lane id for single-lane drives, ``None`` for stitched ones."""
        if len(self.segments) == 1:
            return self.segments[0][1]
        return None

    @property
    def lanes(self) -> tuple[int, ...]:
        return tuple(lane for _, lane in self.segments)

    def lane_at(self, index: int) -> int:
        """Lane of sample ``index``."""
        if not 0 <= index < len(self):
            raise ValueError(f"sample index {index} outside drive of length {len(self)}")
        starts = np.array([s for s, _ in self.segments])
        return self.segments[int(np.searchsorted(starts, index, side="right")) - 1][1]

    def segment_bounds(self) -> list[tuple[int, int, int]]:
        """``(start, end, lane)`` for every segment, ``end`` exclusive."""
        ends = [s for s, _ in self.segments[1:]] + [len(self)]
        return [(s, e, lane) for (s, lane), e in zip(self.segments, ends)]

    def derive(self, samples: np.ndarray, step: dict[str, Any], *, seed: int | None = None,
               segments=None, drive_id: str | None = None) -> "Drive":
        """Copy with new samples and one more provenance step appended."""
        return replace(
            self,
            samples=samples,
            segments=self.segments if segments is None else segments,
            provenance=self.provenance + (step,),
            seed=self.seed if seed is None else seed,
            drive_id=self.drive_id if drive_id is None else drive_id,
            flags=dict(self.flags),
        )


def validate_segments(segments, length: int) -> None:
    if not segments:
        raise ValueError("a drive needs at least one lane segment")
    starts = [s for s, _ in segments]
    if starts[0] != 0:
        raise ValueError(f"first segment must start at 0, got {starts[0]}")
    if any(b <= a for a, b in zip(starts, starts[1:])):
        raise ValueError(f"segment starts must be strictly increasing: {starts}")
    if starts[-1] >= length:
        raise ValueError(f"segment start {starts[-1]} beyond drive length {length}")
