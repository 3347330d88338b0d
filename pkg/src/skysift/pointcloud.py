"""Timestamped LiDAR scan sequences: the pipeline's core data model.

A :class:`ScanSequence` is an ordered list of frames, each holding the 3D
returns of one scan. All downstream analysis works on *superimposed*
point sets (the union of a window of frames, every point keeping its
originating frame index and timestamp) and on per-frame restrictions of
those sets.

Point sets are stored struct-of-arrays: an ``(n, 3)`` float64 coordinate
block plus parallel ``t`` and ``frame_index`` vectors. Arrays are marked
read-only after construction so sets can be shared freely.

File formats
------------
* Scan CSV: header ``frame,t,x,y,z``, one row per point, ``.`` decimal
  separator. Rows of one frame may be scattered through the file, but
  frame indices must be contiguous ``0..f-1``. A frame with no returns is
  recorded as a single row with empty ``x,y,z`` fields so its timestamp
  survives a round trip.
* PCD series: a directory of ASCII ``NNNNNN.pcd`` files plus a sidecar
  ``timestamps.csv`` (header ``frame,t``). Only the ``x y z`` fields of
  each PCD are read.

Coordinates are serialized with 9 significant digits; re-reading a saved
file and saving it again reproduces the file byte for byte.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    EmptySequence,
    MalformedRecord,
    NonMonotonicTimestamps,
    WindowOutOfRange,
)

#: printf-style format used for every coordinate and timestamp we serialize
FLOAT_FMT = "{:.9g}"


def _fmt(v: float) -> str:
    return FLOAT_FMT.format(float(v))


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class PointSet:
    """A bag of 3D points, possibly drawn from several frames.

    Attributes:
        xyz: (n, 3) float64 positions in meters, sensor-origin frame
        t: (n,) float64 per-point timestamps (inherited from the frame)
        frame_index: (n,) int64 index of each point's originating scan
    """

    xyz: np.ndarray
    t: np.ndarray
    frame_index: np.ndarray

    def __post_init__(self):
        xyz = np.asarray(self.xyz, dtype=np.float64).reshape(-1, 3)
        t = np.asarray(self.t, dtype=np.float64).reshape(-1)
        fi = np.asarray(self.frame_index, dtype=np.int64).reshape(-1)
        if not (len(xyz) == len(t) == len(fi)):
            raise ValueError("xyz, t and frame_index must have equal length")
        object.__setattr__(self, "xyz", _readonly(xyz))
        object.__setattr__(self, "t", _readonly(t))
        object.__setattr__(self, "frame_index", _readonly(fi))

    def __len__(self) -> int:
        return self.xyz.shape[0]

    @property
    def cardinality(self) -> int:
        return len(self)

    @staticmethod
    def empty() -> "PointSet":
        return PointSet(np.empty((0, 3)), np.empty(0), np.empty(0, dtype=np.int64))

    def take(self, indices: np.ndarray) -> "PointSet":
        """Sub-set by positional indices (order preserved)."""
        return PointSet(self.xyz[indices], self.t[indices], self.frame_index[indices])


@dataclass(frozen=True)
class Frame:
    """One LiDAR scan: an index, a timestamp, and its returns."""

    index: int
    timestamp: float
    points: PointSet

    def __post_init__(self):
        if self.index < 0:
            raise ValueError(f"frame index must be >= 0, got {self.index}")
        if len(self.points) and not np.all(self.points.frame_index == self.index):
            raise ValueError(f"frame {self.index} holds points tagged with another frame index")

    @staticmethod
    def from_xyz(index: int, timestamp: float, xyz: np.ndarray) -> "Frame":
        """Build a frame from bare coordinates; rejects non-finite values."""
        xyz = np.asarray(xyz, dtype=np.float64).reshape(-1, 3)
        if xyz.size and not np.all(np.isfinite(xyz)):
            raise ValueError(f"frame {index} contains non-finite coordinates")
        n = xyz.shape[0]
        return Frame(
            index=index,
            timestamp=float(timestamp),
            points=PointSet(xyz, np.full(n, float(timestamp)), np.full(n, index, dtype=np.int64)),
        )

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class ScanSequence:
    """An ordered, timestamped list of frames with contiguous indices."""

    frames: tuple

    def __post_init__(self):
        frames = tuple(self.frames)
        if not frames:
            raise EmptySequence("a scan sequence needs at least one frame")
        for pos, fr in enumerate(frames):
            if fr.index != pos:
                raise MalformedRecord(f"frame indices must be contiguous 0..{len(frames) - 1}; "
                                      f"position {pos} holds index {fr.index}")
        ts = np.array([fr.timestamp for fr in frames])
        if np.any(np.diff(ts) <= 0):
            bad = int(np.flatnonzero(np.diff(ts) <= 0)[0]) + 1
            raise NonMonotonicTimestamps(
                f"frame {bad} timestamp {ts[bad]} does not increase past {ts[bad - 1]}")
        object.__setattr__(self, "frames", frames)

    @property
    def n_frames(self) -> int:
        return len(self.frames)

    @property
    def timestamps(self) -> np.ndarray:
        return np.array([fr.timestamp for fr in self.frames])

    def full_window(self) -> "Window":
        return Window(0, self.n_frames - 1)

    def __len__(self) -> int:
        return len(self.frames)


@dataclass(frozen=True)
class Window:
    """An inclusive frame range ``start..end``."""

    start: int
    end: int

    def __post_init__(self):
        if not (0 <= self.start <= self.end):
            raise WindowOutOfRange(f"invalid window [{self.start}, {self.end}]")

    def check_against(self, seq: ScanSequence) -> None:
        if self.end > seq.n_frames - 1:
            raise WindowOutOfRange(
                f"window [{self.start}, {self.end}] exceeds last frame {seq.n_frames - 1}")

    def frames(self) -> range:
        return range(self.start, self.end + 1)

    def __contains__(self, frame_index: int) -> bool:
        return self.start <= frame_index <= self.end


def superimpose(seq: ScanSequence, window: Window) -> PointSet:
    """Union of all points of frames ``window.start..window.end``.

    Every point keeps its frame index and timestamp; the result's
    cardinality is the sum of the member frames' cardinalities.
    """
    window.check_against(seq)
    parts = [seq.frames[i].points for i in window.frames()]
    return PointSet(
        np.concatenate([p.xyz for p in parts]),
        np.concatenate([p.t for p in parts]),
        np.concatenate([p.frame_index for p in parts]),
    )


def restrict_to_frame(ps: PointSet, frame_index: int) -> PointSet:
    """Points of ``ps`` originating from one frame (possibly empty)."""
    return ps.take(np.flatnonzero(ps.frame_index == frame_index))


# ---------------------------------------------------------------------------
# ingestion / serialization
# ---------------------------------------------------------------------------

_CSV_HEADER = "frame,t,x,y,z"


def _parse_float(field: str, name: str, path, line_no: int) -> float:
    try:
        v = float(field)
    except ValueError:
        raise MalformedRecord(f"field '{name}' is not a number: {field!r}", path, line_no)
    if not np.isfinite(v):
        raise MalformedRecord(f"field '{name}' is not finite: {field!r}", path, line_no)
    return v


def _build_sequence(per_frame: dict) -> ScanSequence:
    """Assemble frames keyed by index into a validated sequence."""
    if not per_frame:
        raise EmptySequence("no frames found")
    indices = sorted(per_frame)
    if indices != list(range(len(indices))):
        missing = sorted(set(range(indices[-1] + 1)) - set(indices))
        raise MalformedRecord(f"frame indices are not contiguous; missing {missing}")
    frames = []
    for idx in indices:
        timestamp, rows = per_frame[idx]
        xyz = np.array(rows, dtype=np.float64).reshape(-1, 3)
        frames.append(Frame.from_xyz(idx, timestamp, xyz))
    return ScanSequence(tuple(frames))


def _load_csv(path) -> ScanSequence:
    per_frame: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != _CSV_HEADER:
            raise MalformedRecord(f"expected header '{_CSV_HEADER}', got {header!r}", path, 1)
        for line_no, raw in enumerate(fh, start=2):
            line = raw.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != 5:
                raise MalformedRecord(f"expected 5 fields, got {len(fields)}", path, line_no)
            try:
                frame_idx = int(fields[0])
            except ValueError:
                raise MalformedRecord(f"field 'frame' is not an integer: {fields[0]!r}",
                                      path, line_no)
            t = _parse_float(fields[1], "t", path, line_no)
            empty_coords = all(f == "" for f in fields[2:])
            if frame_idx in per_frame:
                known_t, rows = per_frame[frame_idx]
                if known_t != t:
                    raise MalformedRecord(
                        f"frame {frame_idx} carries two timestamps ({known_t} vs {t})",
                        path, line_no)
            else:
                rows = []
                per_frame[frame_idx] = (t, rows)
            if empty_coords:
                continue  # timestamp-only row: declares an empty frame
            rows.append(tuple(_parse_float(fields[i], n, path, line_no)
                              for i, n in ((2, "x"), (3, "y"), (4, "z"))))
    return _build_sequence(per_frame)


def _save_csv(seq: ScanSequence, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_CSV_HEADER + "\n")
        for fr in seq.frames:
            ts = _fmt(fr.timestamp)
            if len(fr) == 0:
                fh.write(f"{fr.index},{ts},,,\n")
                continue
            for x, y, z in fr.points.xyz:
                fh.write(f"{fr.index},{ts},{_fmt(x)},{_fmt(y)},{_fmt(z)}\n")


def save_points_csv(ps: PointSet, path) -> None:
    """Write a bare point set in the scan CSV schema.

    Unlike :func:`save_sequence` this keeps whatever frame indices the
    points carry (a single cluster usually skips frames), so the result
    is for inspection and plotting, not for :func:`load_sequence`.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_CSV_HEADER + "\n")
        for (x, y, z), t, fi in zip(ps.xyz, ps.t, ps.frame_index):
            fh.write(f"{fi},{_fmt(t)},{_fmt(x)},{_fmt(y)},{_fmt(z)}\n")


def load_points_csv(path) -> PointSet:
    """Read a scan-schema CSV as a flat point set, frame gaps allowed."""
    xyz, ts, fis = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != _CSV_HEADER:
            raise MalformedRecord(f"expected header '{_CSV_HEADER}', got {header!r}", path, 1)
        for line_no, raw in enumerate(fh, start=2):
            line = raw.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != 5:
                raise MalformedRecord(f"expected 5 fields, got {len(fields)}", path, line_no)
            if all(f == "" for f in fields[2:]):
                continue
            try:
                fis.append(int(fields[0]))
            except ValueError:
                raise MalformedRecord(f"field 'frame' is not an integer: {fields[0]!r}",
                                      path, line_no)
            ts.append(_parse_float(fields[1], "t", path, line_no))
            xyz.append(tuple(_parse_float(fields[i], n, path, line_no)
                             for i, n in ((2, "x"), (3, "y"), (4, "z"))))
    return PointSet(np.asarray(xyz, dtype=np.float64).reshape(-1, 3),
                    np.asarray(ts, dtype=np.float64),
                    np.asarray(fis, dtype=np.int64))


def _load_pcd_file(path) -> np.ndarray:
    """Read the x,y,z columns of one ASCII PCD file."""
    fields = None
    n_points = None
    data_start = None
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()
    for i, line in enumerate(lines):
        token = line.split("#", 1)[0].strip()
        if not token:
            continue
        parts = token.split()
        key = parts[0].upper()
        if key == "FIELDS":
            fields = parts[1:]
        elif key == "POINTS":
            n_points = int(parts[1])
        elif key == "DATA":
            if parts[1].lower() != "ascii":
                raise MalformedRecord(f"only ASCII PCD is supported, got {parts[1]!r}",
                                      path, i + 1)
            data_start = i + 1
            break
    if fields is None or data_start is None or n_points is None:
        raise MalformedRecord("incomplete PCD header", path)
    try:
        cols = [fields.index(axis) for axis in ("x", "y", "z")]
    except ValueError:
        raise MalformedRecord(f"PCD fields {fields} lack x/y/z", path)
    rows = []
    for off, line in enumerate(lines[data_start:]):
        token = line.strip()
        if not token:
            continue
        parts = token.split()
        if len(parts) < len(fields):
            raise MalformedRecord(f"expected {len(fields)} columns, got {len(parts)}",
                                  path, data_start + off + 1)
        rows.append(tuple(_parse_float(parts[c], "xyz"[k], path, data_start + off + 1)
                          for k, c in enumerate(cols)))
    if len(rows) != n_points:
        raise MalformedRecord(f"header declares {n_points} points, file holds {len(rows)}", path)
    return np.array(rows, dtype=np.float64).reshape(-1, 3)


def _load_pcd_series(directory) -> ScanSequence:
    sidecar = os.path.join(directory, "timestamps.csv")
    if not os.path.isfile(sidecar):
        raise MalformedRecord("missing timestamps.csv sidecar", directory)
    per_frame: dict = {}
    with open(sidecar, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "frame,t":
            raise MalformedRecord(f"expected header 'frame,t', got {header!r}", sidecar, 1)
        for line_no, raw in enumerate(fh, start=2):
            line = raw.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != 2:
                raise MalformedRecord(f"expected 2 fields, got {len(fields)}", sidecar, line_no)
            idx = int(fields[0])
            t = _parse_float(fields[1], "t", sidecar, line_no)
            if idx in per_frame:
                raise MalformedRecord(f"duplicate frame index {idx}", sidecar, line_no)
            per_frame[idx] = (t, [])
    for idx in per_frame:
        pcd_path = os.path.join(directory, f"{idx:06d}.pcd")
        if not os.path.isfile(pcd_path):
            raise MalformedRecord(f"missing PCD file for frame {idx}", pcd_path)
        xyz = _load_pcd_file(pcd_path)
        per_frame[idx] = (per_frame[idx][0], [tuple(row) for row in xyz])
    return _build_sequence(per_frame)


def _save_pcd_series(seq: ScanSequence, directory) -> None:
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, "timestamps.csv"), "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write("frame,t\n")
        for fr in seq.frames:
            fh.write(f"{fr.index},{_fmt(fr.timestamp)}\n")
    for fr in seq.frames:
        n = len(fr)
        with open(os.path.join(directory, f"{fr.index:06d}.pcd"), "w", encoding="utf-8",
                  newline="\n") as fh:
            fh.write("# .PCD v0.7 - Point Cloud Data file format\n")
            fh.write("VERSION 0.7\nFIELDS x y z\nSIZE 8 8 8\nTYPE F F F\nCOUNT 1 1 1\n")
            fh.write(f"WIDTH {n}\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS {n}\nDATA ascii\n")
            for x, y, z in fr.points.xyz:
                fh.write(f"{_fmt(x)} {_fmt(y)} {_fmt(z)}\n")


def load_sequence(path, format: str = "csv") -> ScanSequence:
    """Load a scan sequence from disk.

    Args:
        path: CSV file path for ``format='csv'``, directory for
            ``format='pcd'``.
        format: ``csv`` or ``pcd`` (``pcd_series`` accepted as an alias).

    Raises:
        MalformedRecord: a record fails the schema or carries non-finite
            coordinates (the offending file/line is identified).
        NonMonotonicTimestamps: frame timestamps do not strictly increase.
        EmptySequence: no frames were found.
    """
    if format == "csv":
        if not os.path.isfile(path):
            raise MalformedRecord("file not found", path)
        return _load_csv(path)
    if format in ("pcd", "pcd_series"):
        if not os.path.isdir(path):
            raise MalformedRecord("directory not found", path)
        return _load_pcd_series(path)
    raise ValueError(f"unknown format {format!r} (expected 'csv' or 'pcd')")


def save_sequence(seq: ScanSequence, path, format: str = "csv") -> None:
    """Write a scan sequence with 9-significant-digit coordinates."""
    if format == "csv":
        _save_csv(seq, path)
    elif format in ("pcd", "pcd_series"):
        _save_pcd_series(seq, path)
    else:
        raise ValueError(f"unknown format {format!r} (expected 'csv' or 'pcd')")


def sequence_from_frame_arrays(timestamps: Sequence[float],
                               frames_xyz: Iterable[np.ndarray]) -> ScanSequence:
    """Convenience constructor: one (n_i, 3) array per frame."""
    frames = tuple(Frame.from_xyz(i, t, xyz)
                   for i, (t, xyz) in enumerate(zip(timestamps, frames_xyz)))
    return ScanSequence(frames)
