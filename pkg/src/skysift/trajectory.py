"""Time-parameterized trajectory reconstruction for the selected cluster.

The selected cluster's points are reduced to one control point per frame
(centroid by default), an interpolating spline is fitted per axis over
the control timestamps, and positions are read off at whatever time nodes
are requested. Cubic with not-a-knot ends for four or more control
points, degree 2 or 1 for shorter sequences.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import make_interp_spline

from .clustering import ClusterLabeling, cluster_members
from .errors import DuplicateTimestamps, EmptyQuery, MalformedRecord, TooFewFrames
from .pointcloud import FLOAT_FMT, PointSet, ScanSequence, superimpose


@dataclass(frozen=True)
class ControlSequence:
    """Per-frame representative points, strictly ordered in time."""

    t: np.ndarray    # (m,)
    xyz: np.ndarray  # (m, 3)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=np.float64).reshape(-1)
        xyz = np.asarray(self.xyz, dtype=np.float64).reshape(-1, 3)
        if len(t) != len(xyz):
            raise ValueError("t and xyz must have equal length")
        if len(t) < 2:
            raise TooFewFrames(f"need at least 2 control points, got {len(t)}")
        if np.any(np.diff(t) <= 0):
            raise DuplicateTimestamps("control timestamps must strictly increase")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(xyz))):
            raise ValueError("control points must be finite")
        t.flags.writeable = False
        xyz.flags.writeable = False
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "xyz", xyz)

    def __len__(self) -> int:
        return len(self.t)


@dataclass(frozen=True)
class SplineModel:
    """Interpolating spline through a control sequence.

    Evaluating at any control timestamp reproduces that control point to
    1e-9 m.
    """

    degree: int
    knots: np.ndarray
    coefficients: np.ndarray
    t_min: float
    t_max: float
    _bspline: object

    def __call__(self, ts: np.ndarray) -> np.ndarray:
        return np.asarray(self._bspline(ts), dtype=np.float64).reshape(-1, 3)


@dataclass(frozen=True)
class Trajectory:
    """(t, x, y, z) samples with strictly increasing timestamps.

    ``clamped`` marks samples whose query time fell outside the spline
    domain and was evaluated at the nearest boundary.
    """

    t: np.ndarray
    xyz: np.ndarray
    clamped: Optional[np.ndarray] = None

    def __post_init__(self):
        t = np.asarray(self.t, dtype=np.float64).reshape(-1)
        xyz = np.asarray(self.xyz, dtype=np.float64).reshape(-1, 3)
        if len(t) != len(xyz):
            raise ValueError("t and xyz must have equal length")
        if len(t) > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("trajectory timestamps must strictly increase")
        t.flags.writeable = False
        xyz.flags.writeable = False
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "xyz", xyz)
        if self.clamped is not None:
            clamped = np.asarray(self.clamped, dtype=bool).reshape(-1)
            clamped.flags.writeable = False
            object.__setattr__(self, "clamped", clamped)

    def __len__(self) -> int:
        return len(self.t)


def _point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    """Distance from point ``p`` to the segment ``a``-``b``."""
    ab = b - a
    denom = float(np.dot(ab, ab))
    if denom == 0.0:
        return float(np.linalg.norm(p - a))
    u = np.clip(np.dot(p - a, ab) / denom, 0.0, 1.0)
    return float(np.linalg.norm(p - (a + u * ab)))


def extract_control_points(seq: ScanSequence, labeling: ClusterLabeling,
                           target_k: int, outlier_gate: float = 3.0,
                           reducer: str = "centroid") -> ControlSequence:
    """One control point per frame in which the target cluster has points.

    Args:
        seq: the scanned sequence the labeling was computed over.
        labeling: full-sequence cluster labeling.
        target_k: the selected cluster id.
        outlier_gate: control points farther than this from the segment
            joining their temporal neighbors are discarded (single pass
            over the original neighbors).
        reducer: per-frame reduction, ``centroid`` or ``median``.

    Raises:
        TooFewFrames: the cluster has points in fewer than two frames, or
            gating left fewer than two control points.
    """
    if reducer not in ("centroid", "median"):
        raise ValueError(f"reducer must be 'centroid' or 'median', got {reducer!r}")
    full = superimpose(seq, seq.full_window())
    pts = cluster_members(labeling, full, target_k)
    frames = np.unique(pts.frame_index)
    if len(frames) < 2:
        raise TooFewFrames(
            f"cluster {target_k} has points in only {len(frames)} frame(s)")

    reduce = (lambda a: a.mean(axis=0)) if reducer == "centroid" \
        else (lambda a: np.median(a, axis=0))
    ts = np.array([seq.frames[int(fi)].timestamp for fi in frames])
    positions = np.array([reduce(pts.xyz[pts.frame_index == fi]) for fi in frames])

    keep = np.ones(len(ts), dtype=bool)
    for j in range(1, len(ts) - 1):
        d = _point_segment_distance(positions[j], positions[j - 1], positions[j + 1])
        if d > outlier_gate:
            keep[j] = False
    if keep.sum() < 2:
        raise TooFewFrames("outlier gating left fewer than 2 control points")
    return ControlSequence(ts[keep], positions[keep])


def fit_spline(cs: ControlSequence, max_degree: int = 3) -> SplineModel:
    """Interpolating spline per axis over the control timestamps.

    Cubic with not-a-knot end conditions; degree drops to 2 or 1 for
    three- or two-point sequences. ``max_degree`` caps the degree (a cap
    of 1 gives piecewise-linear interpolation).

    Raises:
        DuplicateTimestamps: timestamps are not strictly increasing.
    """
    if not 1 <= max_degree <= 5:
        raise ValueError(f"max_degree must be in 1..5, got {max_degree}")
    t = np.asarray(cs.t, dtype=np.float64)
    if np.any(np.diff(t) <= 0):
        raise DuplicateTimestamps("control timestamps must strictly increase")
    degree = min(max_degree, len(t) - 1)
    bspl = make_interp_spline(t, cs.xyz, k=degree)  # default boundary: not-a-knot
    return SplineModel(degree=degree, knots=bspl.t.copy(),
                       coefficients=np.asarray(bspl.c, dtype=np.float64).copy(),
                       t_min=float(t[0]), t_max=float(t[-1]), _bspline=bspl)


def interpolate(sm: SplineModel, ts: Sequence[float]) -> Trajectory:
    """Positions at the requested time nodes, in request order.

    Query times outside the spline domain are evaluated at the nearest
    boundary and flagged in the result's ``clamped`` mask; the requested
    timestamps are kept in the output.

    Raises:
        EmptyQuery: no timestamps requested.
    """
    ts = np.asarray(ts, dtype=np.float64).reshape(-1)
    if ts.size == 0:
        raise EmptyQuery("no timestamps to interpolate at")
    clamped_ts = np.clip(ts, sm.t_min, sm.t_max)
    return Trajectory(t=ts, xyz=sm(clamped_ts), clamped=clamped_ts != ts)


# ---------------------------------------------------------------------------
# trajectory CSV (shared by predictions and ground truth)
# ---------------------------------------------------------------------------

_TRAJ_HEADER = "t,x,y,z"


def save_trajectory_csv(traj: Trajectory, path) -> None:
    """Write ``t,x,y,z`` rows with 9 significant digits."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_TRAJ_HEADER + "\n")
        for t, (x, y, z) in zip(traj.t, traj.xyz):
            fh.write(",".join(FLOAT_FMT.format(v) for v in (t, x, y, z)) + "\n")


def load_trajectory_csv(path) -> Trajectory:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != _TRAJ_HEADER:
            raise MalformedRecord(f"expected header '{_TRAJ_HEADER}', got {header!r}",
                                  path, 1)
        for line_no, raw in enumerate(fh, start=2):
            line = raw.strip()
            if not line:
                continue
            fields = line.split(",")
            if len(fields) != 4:
                raise MalformedRecord(f"expected 4 fields, got {len(fields)}",
                                      path, line_no)
            try:
                vals = [float(f) for f in fields]
            except ValueError:
                raise MalformedRecord(f"non-numeric field in {line!r}", path, line_no)
            if not all(np.isfinite(v) for v in vals):
                raise MalformedRecord(f"non-finite field in {line!r}", path, line_no)
            rows.append(vals)
    arr = np.array(rows, dtype=np.float64).reshape(-1, 4)
    return Trajectory(t=arr[:, 0], xyz=arr[:, 1:])
