"""Drive files on disk: the text CSV format, its binary twin, and ingestion.

A CSV drive looks like::

    # lanesig-drive v1, fs_hz=1000, lane=0, seed=7
    0.0123
    -0.5
    ...

Stitched drives carry ``lane=stitched`` plus a ``# switches=0:0,8000:1`` line
listing every segment start with its lane.  The binary file stores the same
content behind the magic ``LSDRV1``; samples are 32-bit floats, so a binary
round trip is exact only for float32 data.
"""

from __future__ import annotations

import re
import struct
from pathlib import Path

import numpy as np

from lanesig.drive import Drive

CSV_VERSION = "lanesig-drive v1"
BINARY_MAGIC = b"LSDRV1"
_BIN_HEAD = struct.Struct("<QdI")
_BIN_SEG = struct.Struct("<QI")


class DriveFormatError(ValueError):
    """A drive file that cannot be parsed; ``line`` is 1-based when known."""

    def __init__(self, message: str, *, path=None, line: int | None = None):
        where = str(path) if path is not None else "<drive>"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line


def _fmt_fs(fs: float) -> str:
    return repr(float(fs)).removesuffix(".0")


def write_drive_csv(drive: Drive, path) -> Path:
    path = Path(path)
    lane = "stitched" if drive.lane is None else str(drive.lane)
    lines = [f"# {CSV_VERSION}, fs_hz={_fmt_fs(drive.sample_rate_hz)}, lane={lane}, seed={int(drive.seed)}"]
    if drive.lane is None:
        lines.append("# switches=" + ",".join(f"{i}:{l}" for i, l in drive.segments))
    # repr round-trips float64 exactly
    lines.extend(repr(float(v)) for v in drive.samples)
    path.write_text("\n".join(lines) + "\n")
    return path


_HEADER = re.compile(r"#\s*lanesig-drive v(\d+)\s*,(.*)$")


def _parse_header(text: str, path, line: int) -> dict[str, str]:
    m = _HEADER.match(text.strip())
    if not m:
        raise DriveFormatError(f"expected '# {CSV_VERSION}, fs_hz=..., lane=..., seed=...' header",
                               path=path, line=line)
    if m.group(1) != "1":
        raise DriveFormatError(f"unsupported drive format version {m.group(1)}", path=path, line=line)
    fields = {}
    for part in m.group(2).split(","):
        key, sep, value = part.strip().partition("=")
        if not sep:
            raise DriveFormatError(f"malformed header field {part.strip()!r}", path=path, line=line)
        fields[key.strip()] = value.strip()
    missing = {"fs_hz", "lane", "seed"} - fields.keys()
    if missing:
        raise DriveFormatError(f"header lacks {', '.join(sorted(missing))}", path=path, line=line)
    return fields


def _parse_switches(text: str, path, line: int) -> tuple[tuple[int, int], ...]:
    body = text.strip()[1:].strip()
    if not body.startswith("switches="):
        raise DriveFormatError("expected '# switches=i:lane,...'", path=path, line=line)
    out = []
    for item in body[len("switches="):].split(","):
        try:
            i, lane = item.split(":")
            out.append((int(i), int(lane)))
        except ValueError:
            raise DriveFormatError(f"bad switch entry {item!r}", path=path, line=line) from None
    return tuple(out)


def read_drive_csv(path, *, drive_id: str | None = None) -> Drive:
    """Parse a CSV drive, rejecting anything that breaks ``Drive`` invariants.

    Errors carry the 1-based line number of the offending line.
    """
    path = Path(path)
    with path.open() as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DriveFormatError("empty file", path=path, line=1)
    head = _parse_header(lines[0], path, 1)
    try:
        fs = float(head["fs_hz"])
    except ValueError:
        raise DriveFormatError(f"fs_hz={head['fs_hz']!r} is not a number", path=path, line=1) from None
    if not (np.isfinite(fs) and fs > 0):
        raise DriveFormatError(f"fs_hz must be positive, got {head['fs_hz']}", path=path, line=1)
    try:
        seed = int(head["seed"])
    except ValueError:
        raise DriveFormatError(f"seed={head['seed']!r} is not an integer", path=path, line=1) from None

    body_start = 1
    segments = None
    if len(lines) > 1 and lines[1].lstrip().startswith("#"):
        segments = _parse_switches(lines[1], path, 2)
        body_start = 2
    switch_line = 2 if segments is not None else None
    if head["lane"] == "stitched":
        if segments is None:
            raise DriveFormatError("stitched drive without a '# switches=' line", path=path, line=2)
    else:
        try:
            lane = int(head["lane"])
        except ValueError:
            raise DriveFormatError(f"lane={head['lane']!r} is neither an id nor 'stitched'",
                                   path=path, line=1) from None
        if lane < 0:
            raise DriveFormatError(f"lane id must be >= 0, got {lane}", path=path, line=1)
        if segments is None:
            segments = ((0, lane),)
        elif segments != ((0, lane),):
            raise DriveFormatError("switches line contradicts the single-lane header",
                                   path=path, line=switch_line)

    values = []
    for no, text in enumerate(lines[body_start:], start=body_start + 1):
        text = text.strip()
        if not text:
            continue
        try:
            v = float(text)
        except ValueError:
            raise DriveFormatError(f"not a number: {text!r}", path=path, line=no) from None
        if not np.isfinite(v):
            raise DriveFormatError(f"non-finite sample {text!r}", path=path, line=no)
        values.append(v)
    if not values:
        raise DriveFormatError("no samples", path=path, line=len(lines))
    _check_segments(segments, len(values), path, switch_line)
    return Drive(samples=np.array(values), sample_rate_hz=fs, segments=segments, seed=seed,
                 drive_id=drive_id or path.stem, provenance=({"kind": "file", "path": str(path)},))


def _check_segments(segments, length: int, path, line) -> None:
    # same rules as Drive, restated so the message can point at the file line
    starts = [s for s, _ in segments]
    if starts[0] != 0:
        raise DriveFormatError(f"first segment must start at 0, got {starts[0]}", path=path, line=line)
    if any(b <= a for a, b in zip(starts, starts[1:])):
        raise DriveFormatError(f"switch indices must strictly increase: {starts}", path=path, line=line)
    if starts[-1] >= length:
        raise DriveFormatError(f"switch at {starts[-1]} beyond {length} samples", path=path, line=line)
    if any(lane < 0 for _, lane in segments):
        raise DriveFormatError("lane ids must be >= 0", path=path, line=line)


def write_drive_binary(drive: Drive, path) -> Path:
    path = Path(path)
    parts = [BINARY_MAGIC, _BIN_HEAD.pack(len(drive), float(drive.sample_rate_hz), len(drive.segments))]
    parts += [_BIN_SEG.pack(i, lane) for i, lane in drive.segments]
    parts.append(np.asarray(drive.samples, dtype="<f4").tobytes())
    path.write_bytes(b"".join(parts))
    return path


def read_drive_binary(path, *, drive_id: str | None = None) -> Drive:
    path = Path(path)
    raw = path.read_bytes()
    if not raw.startswith(BINARY_MAGIC):
        raise DriveFormatError("missing LSDRV1 magic", path=path)
    pos = len(BINARY_MAGIC)
    try:
        count, fs, n_seg = _BIN_HEAD.unpack_from(raw, pos)
        pos += _BIN_HEAD.size
        segments = tuple(_BIN_SEG.unpack_from(raw, pos + k * _BIN_SEG.size) for k in range(n_seg))
    except struct.error:
        raise DriveFormatError("truncated header", path=path) from None
    pos += n_seg * _BIN_SEG.size
    if len(raw) - pos != 4 * count:
        raise DriveFormatError(f"expected {count} samples, found {(len(raw) - pos) / 4:g}", path=path)
    samples = np.frombuffer(raw, dtype="<f4", count=count, offset=pos).astype(np.float32)
    if n_seg == 0:
        raise DriveFormatError("no lane segments", path=path)
    _check_segments(segments, count, path, None)
    return Drive(samples=samples, sample_rate_hz=fs, segments=segments,
                 drive_id=drive_id or path.stem, provenance=({"kind": "file", "path": str(path)},))


def write_drive(drive: Drive, path) -> Path:
    """Write by extension: ``.bin`` is binary, anything else CSV."""
    if Path(path).suffix == ".bin":
        return write_drive_binary(drive, path)
    return write_drive_csv(drive, path)


def read_drive(path, *, drive_id: str | None = None) -> Drive:
    with open(path, "rb") as fh:
        magic = fh.read(len(BINARY_MAGIC))
    if magic == BINARY_MAGIC:
        return read_drive_binary(path, drive_id=drive_id)
    return read_drive_csv(path, drive_id=drive_id)


def ingest_csv(path, *, fs_hz: float | None = None, lane: int | None = None, column: int = 0,
               delimiter: str | None = None, seed: int = 0) -> Drive:
    """Read an external CSV of accelerometer samples into a ``Drive``.

    Files already in the drive format are parsed as such.  Otherwise the file
    is a plain table: lines starting with ``#`` and a non-numeric first line
    (a column header) are skipped, and ``column`` holds the z samples.  The
    sample rate and lane must then come from the caller.
    """
    path = Path(path)
    with path.open() as fh:
        lines = fh.read().splitlines()
    if lines and _HEADER.match(lines[0].strip()):
        drive = read_drive_csv(path)
        if fs_hz is not None and fs_hz != drive.sample_rate_hz:
            raise DriveFormatError(f"file says fs_hz={drive.sample_rate_hz:g} but {fs_hz:g} was given",
                                   path=path, line=1)
        return drive
    if fs_hz is None or lane is None:
        raise DriveFormatError("plain CSV needs an explicit sample rate and lane", path=path)
    if not (np.isfinite(fs_hz) and fs_hz > 0):
        raise DriveFormatError(f"sample rate must be positive, got {fs_hz}", path=path)
    if lane < 0:
        raise DriveFormatError(f"lane id must be >= 0, got {lane}", path=path)
    values = []
    for no, text in enumerate(lines, start=1):
        text = text.strip()
        if not text or text.startswith("#"):
            continue
        cells = [c.strip() for c in (text.split(delimiter) if delimiter else re.split(r"[,;\s]+", text))]
        if column >= len(cells):
            raise DriveFormatError(f"no column {column} in {len(cells)}-column row", path=path, line=no)
        try:
            v = float(cells[column])
        except ValueError:
            if not values and no == _first_data_line(lines):
                continue  # column header
            raise DriveFormatError(f"not a number: {cells[column]!r}", path=path, line=no) from None
        if not np.isfinite(v):
            raise DriveFormatError(f"non-finite sample {cells[column]!r}", path=path, line=no)
        values.append(v)
    if not values:
        raise DriveFormatError("no samples", path=path, line=max(1, len(lines)))
    return Drive(samples=np.array(values), sample_rate_hz=fs_hz, segments=((0, lane),), seed=seed,
                 drive_id=path.stem, provenance=({"kind": "ingested", "path": str(path)},))


def _first_data_line(lines) -> int:
    for no, text in enumerate(lines, start=1):
        if text.strip() and not text.strip().startswith("#"):
            return no
    return 0
