"""Cluster scoring and moving-target selection.

Static surfaces accumulate points over time (their window density falls
below their full-sequence density) and keep their voxel footprint put
(per-frame IoU near 1). A mover does the opposite on both counts. The
score of a cluster adds the two kinds of evidence over the sequence:

* IoU evidence: ``sum(ln(1 / max(iou, floor)))`` over frame pairs, zero
  for a perfectly stationary footprint, large when footprints stop
  overlapping;
* density evidence: ``sum(exp(r))`` over windows, where ``r`` is the
  window's relative density;
* total: ``density + weight * iou``.

The cluster with the highest total is the target. Ties break toward the
smaller global voxel footprint (a drone is compact), and the winning
margin over the runner-up is reported as a confidence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .clustering import ClusterLabeling, DbscanParams, dbscan
from .errors import LabelingMismatch, NoClusters
from .pointcloud import PointSet, ScanSequence, Window, restrict_to_frame, superimpose
from .voxel import VoxelGrid, density, relative_density, voxel_iou, voxelize

PAIR_SCHEDULES = ("consecutive", "all_pairs", "endpoints")


@dataclass(frozen=True)
class ScoringParams:
    """Knobs of the scoring pass.

    Attributes:
        iou_weight: weight on the IoU term in the combined score (>= 0).
        iou_floor: clamp applied to IoU values before the log, so disjoint
            footprints yield a large finite score instead of infinity.
        pair_schedule: which frame pairs inside each window contribute IoU
            terms: ``consecutive`` (n, n+1), ``all_pairs``, or
            ``endpoints`` (the window's first and last frame).
        window_len: frames per local window (>= 2).
        rerun_local_clustering: re-cluster each window and match clusters
            back to the global labeling by point overlap, instead of
            restricting global labels.
        max_cluster_voxels: clusters whose full-sequence footprint exceeds
            this many voxels are excluded before scoring (cheap rejection
            of large static structure); None disables the pre-filter.
    """

    iou_weight: float = 1.0
    iou_floor: float = 1e-6
    pair_schedule: str = "consecutive"
    window_len: int = 10
    rerun_local_clustering: bool = False
    max_cluster_voxels: Optional[int] = 5000

    def __post_init__(self):
        if self.iou_weight < 0:
            raise ValueError(f"iou_weight must be >= 0, got {self.iou_weight}")
        if not 0 < self.iou_floor <= 1:
            raise ValueError(f"iou_floor must be in (0, 1], got {self.iou_floor}")
        if self.pair_schedule not in PAIR_SCHEDULES:
            raise ValueError(f"pair_schedule must be one of {PAIR_SCHEDULES}, "
                             f"got {self.pair_schedule!r}")
        if self.window_len < 2:
            raise ValueError(f"window_len must be >= 2, got {self.window_len}")


@dataclass(frozen=True)
class WindowContribution:
    """Audit record of one window's evidence for one cluster."""

    start: int
    end: int
    relative_density: Optional[float]  # None when the cluster is absent
    pair_ious: tuple  # ((frame_i, frame_j, iou), ...)


@dataclass(frozen=True)
class ScoreBreakdown:
    """Full scoring evidence for one cluster."""

    cluster_id: int
    iou_term: float
    density_term: float
    total: float
    iou_weight: float
    n_points: int
    n_frames_present: int
    global_voxel_count: int
    global_density: float
    eligible: bool
    exclusion_reason: Optional[str]
    contributions: tuple  # (WindowContribution, ...)


@dataclass(frozen=True)
class SelectionResult:
    cluster_id: int
    confidence: float
    low_confidence: bool


def iou_score(ious: Sequence[float], eps_floor: float) -> float:
    """Sum of ln(1/iou) with IoUs clamped at ``eps_floor`` from below.

    Monotone non-increasing in every input; exactly 0 when all IoUs are 1.
    """
    arr = np.asarray(ious, dtype=np.float64)
    if arr.size == 0:
        return 0.0
    return float(np.sum(np.log(1.0 / np.maximum(arr, eps_floor))))


def density_score(rs: Sequence[float]) -> float:
    """Sum of exp(r) over a cluster's relative densities (0 if empty)."""
    arr = np.asarray(rs, dtype=np.float64)
    if arr.size == 0:
        return 0.0
    return float(np.sum(np.exp(arr)))


def combined_score(density_term: float, iou_term: float, iou_weight: float) -> float:
    return density_term + iou_weight * iou_term


def partition_windows(n_frames: int, window_len: int) -> list:
    """Split frames 0..n_frames-1 into consecutive windows of window_len."""
    return [Window(s, min(s + window_len - 1, n_frames - 1))
            for s in range(0, n_frames, window_len)]


def _schedule_pairs(window: Window, schedule: str) -> list:
    if schedule == "consecutive":
        return [(n, n + 1) for n in range(window.start, window.end)]
    if schedule == "all_pairs":
        return [(a, b)
                for a in range(window.start, window.end + 1)
                for b in range(a + 1, window.end + 1)]
    if schedule == "endpoints":
        return [(window.start, window.end)] if window.end > window.start else []
    raise ValueError(f"unknown pair schedule {schedule!r}")


def _match_local_cluster(local_labels: np.ndarray, member_mask: np.ndarray,
                         n_local: int) -> int:
    """Local cluster holding the plurality of a global cluster's points.

    Returns -1 when no local cluster overlaps the global members.
    """
    overlap_labels = local_labels[member_mask]
    overlap_labels = overlap_labels[overlap_labels >= 0]
    if overlap_labels.size == 0:
        return -1
    counts = np.bincount(overlap_labels, minlength=n_local)
    return int(np.argmax(counts))  # argmax takes the lowest id on ties


class _WindowView:
    """Per-window points of one cluster plus its per-frame voxel grids."""

    def __init__(self, points: PointSet, edge: float):
        self.points = points
        self._edge = edge
        self._grids: dict = {}

    def frame_grid(self, frame_index: int) -> VoxelGrid:
        if frame_index not in self._grids:
            self._grids[frame_index] = voxelize(
                restrict_to_frame(self.points, frame_index), self._edge)
        return self._grids[frame_index]


def score_all_clusters(seq: ScanSequence, labeling: ClusterLabeling,
                       params: ScoringParams, edge: float,
                       dbscan_params: Optional[DbscanParams] = None) -> list:
    """Score every cluster of a full-sequence labeling.

    For each non-noise cluster the sequence is partitioned into windows of
    ``params.window_len``. A window where the cluster has points
    contributes ``exp(local density / global density)``; each scheduled
    frame pair where the cluster has points on both sides contributes an
    IoU term. Windows and pairs where the cluster is absent are skipped.
    Clusters whose footprint trips the voxel pre-filter, or that appear in
    fewer than two frames, are returned ineligible with zero scores.

    Returns one :class:`ScoreBreakdown` per cluster, ordered by id.

    Raises:
        LabelingMismatch: the labeling was not computed over the full
            sequence superposition.
    """
    full_window = seq.full_window()
    if labeling.source_window != full_window:
        raise LabelingMismatch(
            f"labeling window {labeling.source_window} is not the full "
            f"sequence window {full_window}")
    full = superimpose(seq, full_window)
    if len(labeling) != len(full):
        raise LabelingMismatch(
            f"labeling covers {len(labeling)} points, sequence superposition "
            f"has {len(full)}")
    if params.rerun_local_clustering and dbscan_params is None:
        raise ValueError("rerun_local_clustering requires dbscan_params")

    windows = partition_windows(seq.n_frames, params.window_len)
    # Frame offsets into the superposition let a window slice out its points.
    frame_sizes = np.array([len(fr) for fr in seq.frames], dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(frame_sizes)])

    local_labelings = {}
    if params.rerun_local_clustering:
        for w in windows:
            w_points = full.take(np.arange(offsets[w.start], offsets[w.end + 1]))
            if len(w_points):
                local_labelings[(w.start, w.end)] = (w_points,
                                                     dbscan(w_points, dbscan_params, w))

    labels = labeling.labels
    breakdowns = []
    for k in range(labeling.n_clusters):
        member_idx = np.flatnonzero(labels == k)
        pts = full.take(member_idx)
        global_grid = voxelize(pts, edge)
        frames_present = np.unique(pts.frame_index)
        base = dict(cluster_id=k, iou_weight=params.iou_weight, n_points=len(pts),
                    n_frames_present=int(len(frames_present)),
                    global_voxel_count=global_grid.count)

        if (params.max_cluster_voxels is not None
                and global_grid.count > params.max_cluster_voxels):
            breakdowns.append(ScoreBreakdown(
                iou_term=0.0, density_term=0.0, total=0.0, global_density=0.0,
                eligible=False, exclusion_reason="voxel_prefilter",
                contributions=(), **base))
            continue

        global_density = density(pts, edge) if len(pts) else 0.0
        contributions = []
        all_rs = []
        all_ious = []
        for w in windows:
            if params.rerun_local_clustering:
                view = _rerun_window_view(local_labelings.get((w.start, w.end)),
                                          labels, offsets, w, k, edge)
            else:
                in_window = ((pts.frame_index >= w.start)
                             & (pts.frame_index <= w.end))
                local_pts = pts.take(np.flatnonzero(in_window))
                view = _WindowView(local_pts, edge) if len(local_pts) else None
            if view is None or len(view.points) == 0:
                contributions.append(WindowContribution(w.start, w.end, None, ()))
                continue
            r = relative_density(density(view.points, edge), global_density)
            pair_records = []
            for a, b in _schedule_pairs(w, params.pair_schedule):
                grid_a = view.frame_grid(a)
                grid_b = view.frame_grid(b)
                if grid_a.count == 0 or grid_b.count == 0:
                    continue
                pair_records.append((a, b, voxel_iou(grid_a, grid_b)))
            contributions.append(
                WindowContribution(w.start, w.end, r, tuple(pair_records)))
            all_rs.append(r)
            all_ious.extend(iou for _, _, iou in pair_records)

        iou_term = iou_score(all_ious, params.iou_floor)
        density_term = density_score(all_rs)
        eligible = len(frames_present) >= 2
        breakdowns.append(ScoreBreakdown(
            iou_term=iou_term, density_term=density_term,
            total=combined_score(density_term, iou_term, params.iou_weight),
            global_density=global_density, eligible=eligible,
            exclusion_reason=None if eligible else "too_few_frames",
            contributions=tuple(contributions), **base))
    return breakdowns


def _rerun_window_view(entry, labels, offsets, window: Window, k: int,
                       edge: float):
    """Window view for re-cluster mode: the local cluster matched to ``k``."""
    if entry is None:
        return None
    w_points, local_labeling = entry
    w_slice = slice(int(offsets[window.start]), int(offsets[window.end + 1]))
    member_mask = labels[w_slice] == k
    if local_labeling.n_clusters == 0:
        return None
    match = _match_local_cluster(local_labeling.labels, member_mask,
                                 local_labeling.n_clusters)
    if match < 0:
        return None
    matched_pts = w_points.take(np.flatnonzero(local_labeling.labels == match))
    return _WindowView(matched_pts, edge)


def select_target(scores: Sequence[ScoreBreakdown],
                  min_margin: float = 0.1) -> SelectionResult:
    """Pick the highest-scoring eligible cluster.

    Exact score ties break toward the smaller global voxel footprint, then
    the lower cluster id. Confidence is the relative margin over the
    runner-up, ``(best - second) / |best|``; with fewer than two eligible
    clusters (no contrast to measure) it is 0 and flagged low.

    Raises:
        NoClusters: no eligible cluster to select from.
    """
    candidates = [s for s in scores if s.eligible]
    if not candidates:
        raise NoClusters("no eligible clusters to select from")
    ranked = sorted(candidates,
                    key=lambda s: (-s.total, s.global_voxel_count, s.cluster_id))
    best = ranked[0]
    if len(ranked) < 2 or best.total == 0:
        confidence = 0.0
    else:
        confidence = (best.total - ranked[1].total) / abs(best.total)
    return SelectionResult(cluster_id=best.cluster_id, confidence=confidence,
                           low_confidence=confidence < min_margin)


def audit_document(breakdowns: Sequence[ScoreBreakdown],
                   selection: Optional[SelectionResult],
                   params: ScoringParams, edge: float) -> dict:
    """JSON-ready audit record of a scoring run (schema in the README)."""
    clusters = []
    for s in breakdowns:
        windows = [{
            "start": c.start,
            "end": c.end,
            "relative_density": c.relative_density,
            "pairs": [{"i": a, "j": b, "iou": iou} for a, b, iou in c.pair_ious],
        } for c in s.contributions]
        clusters.append({
            "cluster_id": s.cluster_id,
            "n_points": s.n_points,
            "n_frames_present": s.n_frames_present,
            "global_voxel_count": s.global_voxel_count,
            "global_density": s.global_density,
            "iou_term": s.iou_term,
            "density_term": s.density_term,
            "total": s.total,
            "eligible": s.eligible,
            "exclusion_reason": s.exclusion_reason,
            "windows": windows,
        })
    doc = {
        "voxel_edge": edge,
        "params": {
            "iou_weight": params.iou_weight,
            "iou_floor": params.iou_floor,
            "pair_schedule": params.pair_schedule,
            "window_len": params.window_len,
            "rerun_local_clustering": params.rerun_local_clustering,
            "max_cluster_voxels": params.max_cluster_voxels,
        },
        "clusters": clusters,
        "selection": None if selection is None else {
            "cluster_id": selection.cluster_id,
            "confidence": selection.confidence,
            "low_confidence": selection.low_confidence,
        },
    }
    return doc
