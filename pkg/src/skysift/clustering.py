"""Density-based clustering of superimposed point sets.

DBSCAN over the 3D coordinates only (time is never a clustering
dimension): a point is *core* iff its closed eps-ball holds at least
``min_pts`` points (itself included); clusters are the connected
components of core points under the eps relation, plus the border points
reachable from them; everything else is noise.

The labeling is canonical and traversal-independent:

* a border point in reach of several clusters joins the cluster of its
  lowest-index core neighbor;
* cluster ids are renumbered in increasing order of each cluster's lowest
  member point index.

Neighbor queries run through a kd-tree and the component search through a
sparse graph, so the whole labeling is a handful of vectorized passes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import EmptyInput, LabelingMismatch, UnknownClusterId
from .pointcloud import PointSet, Window

#: label given to points not reachable from any core point
NOISE = -1


@dataclass(frozen=True)
class DbscanParams:
    """eps: neighborhood radius in meters; min_pts: minimum closed-ball count."""

    eps: float = 1.0
    min_pts: int = 4

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError(f"eps must be > 0, got {self.eps}")
        if self.min_pts < 1:
            raise ValueError(f"min_pts must be >= 1, got {self.min_pts}")


@dataclass(frozen=True)
class ClusterLabeling:
    """Per-point cluster ids (``NOISE`` = -1) over one superposition window."""

    labels: np.ndarray
    n_clusters: int
    source_window: Window

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.labels)

    def cluster_sizes(self) -> np.ndarray:
        """Member count per cluster id."""
        return np.bincount(self.labels[self.labels >= 0], minlength=self.n_clusters)


def dbscan(ps: PointSet, params: DbscanParams,
           source_window: Window | None = None) -> ClusterLabeling:
    """Label a point set with canonical DBSCAN cluster ids.

    Args:
        ps: non-empty point set (usually a superimposed window).
        params: eps / min_pts.
        source_window: window the point set was superimposed from; recorded
            on the labeling so downstream scoring can verify provenance.

    Raises:
        EmptyInput: ``ps`` has no points.
    """
    n = len(ps)
    if n == 0:
        raise EmptyInput("cannot cluster an empty point set")
    if source_window is None:
        fi = ps.frame_index
        source_window = Window(int(fi.min()), int(fi.max())) if n else Window(0, 0)

    tree = cKDTree(ps.xyz)
    pairs = tree.query_pairs(params.eps, output_type="ndarray")  # (m, 2), i < j

    counts = np.ones(n, dtype=np.int64)
    if len(pairs):
        counts += np.bincount(pairs.ravel(), minlength=n)
    core = counts >= params.min_pts

    labels = np.full(n, NOISE, dtype=np.int64)
    core_idx = np.flatnonzero(core)
    if len(core_idx) == 0:
        return ClusterLabeling(labels, 0, source_window)

    # Components of the core-core eps graph.
    core_rank = np.full(n, -1, dtype=np.int64)
    core_rank[core_idx] = np.arange(len(core_idx))
    if len(pairs):
        cc_mask = core[pairs[:, 0]] & core[pairs[:, 1]]
        rows = core_rank[pairs[cc_mask, 0]]
        cols = core_rank[pairs[cc_mask, 1]]
    else:
        rows = cols = np.empty(0, dtype=np.int64)
    graph = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)),
                       shape=(len(core_idx), len(core_idx)))
    _, comp = connected_components(graph, directed=False)
    labels[core_idx] = comp

    # Border points: lowest-index core neighbor claims them.
    if len(pairs):
        claim = np.full(n, n, dtype=np.int64)  # sentinel n == "no claimant"
        a_core = core[pairs[:, 0]]
        b_core = core[pairs[:, 1]]
        m = a_core & ~b_core
        np.minimum.at(claim, pairs[m, 1], pairs[m, 0])
        m = ~a_core & b_core
        np.minimum.at(claim, pairs[m, 0], pairs[m, 1])
        border = np.flatnonzero((claim < n) & ~core)
        labels[border] = labels[claim[border]]

    # Canonical ids: increasing order of each cluster's lowest member index.
    member = labels >= 0
    k_raw = int(labels[member].max()) + 1
    first_member = np.full(k_raw, n, dtype=np.int64)
    np.minimum.at(first_member, labels[member], np.flatnonzero(member))
    remap = np.empty(k_raw, dtype=np.int64)
    remap[np.argsort(first_member, kind="stable")] = np.arange(k_raw)
    labels[member] = remap[labels[member]]

    return ClusterLabeling(labels, k_raw, source_window)


def cluster_members(labeling: ClusterLabeling, ps: PointSet, k: int) -> PointSet:
    """Exactly the points labeled ``k``, in point order."""
    if len(labeling) != len(ps):
        raise LabelingMismatch(
            f"labeling covers {len(labeling)} points, point set has {len(ps)}")
    if not (0 <= k < labeling.n_clusters):
        raise UnknownClusterId(f"cluster id {k} outside 0..{labeling.n_clusters - 1}")
    return ps.take(np.flatnonzero(labeling.labels == k))
