"""RMSE evaluation of predicted trajectories against ground truth.

Ground-truth samples are paired with the prediction linearly interpolated
at their timestamps; per-axis RMSEs and the aggregate (their Euclidean
combination, equal to the RMS of the 3D error norm) summarize the match.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyPairs, NoOverlap
from .trajectory import Trajectory


@dataclass(frozen=True)
class AlignedPairs:
    """Matched (prediction, ground truth) samples at ground-truth times."""

    t: np.ndarray         # (n,)
    pred_xyz: np.ndarray  # (n, 3)
    gt_xyz: np.ndarray    # (n, 3)
    dropped: int          # GT samples too far outside the prediction domain

    def __len__(self) -> int:
        return len(self.t)


@dataclass(frozen=True)
class RmseReport:
    """Per-axis and aggregate RMSE in meters."""

    dx: float
    dy: float
    dz: float
    aggregate: float
    n_pairs: int
    dropped: int

    def as_dict(self) -> dict:
        return {"dx": self.dx, "dy": self.dy, "dz": self.dz,
                "aggregate": self.aggregate, "n_pairs": self.n_pairs,
                "dropped": self.dropped}


def align_by_timestamp(pred: Trajectory, gt: Trajectory,
                       max_dt: float = 0.5) -> AlignedPairs:
    """Pair every usable ground-truth sample with the interpolated prediction.

    GT samples farther than ``max_dt`` outside the prediction's time span
    are dropped (and counted); samples within the tolerance but outside
    the span evaluate at the nearest prediction endpoint.

    Raises:
        NoOverlap: the pairing is empty.
    """
    if len(pred) == 0 or len(gt) == 0:
        raise NoOverlap("prediction and ground truth must both be non-empty")
    lo, hi = pred.t[0] - max_dt, pred.t[-1] + max_dt
    usable = (gt.t >= lo) & (gt.t <= hi)
    if not np.any(usable):
        raise NoOverlap(
            f"no ground-truth sample within {max_dt} s of the prediction span "
            f"[{pred.t[0]}, {pred.t[-1]}]")
    ts = gt.t[usable]
    pred_xyz = np.stack([np.interp(ts, pred.t, pred.xyz[:, d]) for d in range(3)],
                        axis=1)
    return AlignedPairs(t=ts, pred_xyz=pred_xyz, gt_xyz=gt.xyz[usable],
                        dropped=int(len(gt) - usable.sum()))


def per_axis_rmse(pairs: AlignedPairs) -> tuple:
    """Root-mean-square residual per axis over the pairing."""
    if len(pairs) == 0:
        raise EmptyPairs("RMSE over zero pairs is undefined")
    res = pairs.pred_xyz - pairs.gt_xyz
    return tuple(float(v) for v in np.sqrt(np.mean(res ** 2, axis=0)))


def aggregate_rmse(dx: float, dy: float, dz: float) -> float:
    """Euclidean combination of per-axis RMSEs (RMS of the 3D error norm)."""
    return math.sqrt(dx * dx + dy * dy + dz * dz)


def evaluate(pred: Trajectory, gt: Trajectory, max_dt: float = 0.5) -> RmseReport:
    """Align and summarize in one step."""
    pairs = align_by_timestamp(pred, gt, max_dt)
    dx, dy, dz = per_axis_rmse(pairs)
    return RmseReport(dx=dx, dy=dy, dz=dz, aggregate=aggregate_rmse(dx, dy, dz),
                      n_pairs=len(pairs), dropped=pairs.dropped)


def save_report_json(report: RmseReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report.as_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
