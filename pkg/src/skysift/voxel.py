"""Voxel occupancy and the cluster statistics built on it.

All grids share one axis-aligned lattice anchored at the world origin
(voxel ``(0,0,0)`` spans ``[0, edge)^3``), so occupancy sets of different
frames and windows are directly comparable. A cluster's *density* is its
point count divided by the volume of the voxels it occupies; the
*relative density* of a window is its local density over the cluster's
full-sequence density (values above 1 flag movers, below 1 static
accumulators); the per-frame *voxel IoU* measures how well a cluster's
footprint stays put between two frames.

Densities and relative densities are plain floats; the producing
functions enforce their positivity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BothEmpty,
    EdgeMismatch,
    EmptyCluster,
    NonPositiveEdge,
    ZeroGlobalDensity,
)
from .pointcloud import PointSet


@dataclass(frozen=True)
class VoxelGrid:
    """The set of lattice cells a point set occupies, at one edge length.

    ``occupied`` is a (m, 3) int64 array of unique voxel coordinates in
    lexicographic order.
    """

    edge: float
    occupied: np.ndarray

    def __post_init__(self):
        if not self.edge > 0:
            raise NonPositiveEdge(f"voxel edge must be > 0, got {self.edge}")
        occ = np.asarray(self.occupied, dtype=np.int64).reshape(-1, 3)
        occ.flags.writeable = False
        object.__setattr__(self, "occupied", occ)

    @property
    def count(self) -> int:
        return self.occupied.shape[0]

    def __len__(self) -> int:
        return self.count


def voxel_of(xyz: np.ndarray, edge: float) -> np.ndarray:
    """Integer voxel coordinate of each point: floor(p / edge) per axis."""
    if not edge > 0:
        raise NonPositiveEdge(f"voxel edge must be > 0, got {edge}")
    return np.floor(np.asarray(xyz, dtype=np.float64) / edge).astype(np.int64)


def voxelize(ps: PointSet, edge: float) -> VoxelGrid:
    """Occupied-voxel set of a point set (duplicates collapse)."""
    if len(ps) == 0:
        return VoxelGrid(edge, np.empty((0, 3), dtype=np.int64))
    cells = np.unique(voxel_of(ps.xyz, edge), axis=0)
    return VoxelGrid(edge, cells)


def voxel_volume(grid: VoxelGrid) -> float:
    """Occupied volume in cubic meters: count x edge^3."""
    return grid.count * grid.edge ** 3


def density(cluster: PointSet, edge: float) -> float:
    """Points per cubic meter of occupied voxel volume.

    The same formula serves the global statistic (cluster drawn from the
    full-sequence superposition) and the local one (cluster restricted to
    a window): count divided by occupied-voxel volume.
    """
    if len(cluster) == 0:
        raise EmptyCluster("density of an empty cluster is undefined")
    return len(cluster) / voxel_volume(voxelize(cluster, edge))


def voxel_iou(a: VoxelGrid, b: VoxelGrid) -> float:
    """Intersection-over-union of two occupancy sets on one lattice."""
    if a.edge != b.edge:
        raise EdgeMismatch(f"grids use different edges ({a.edge} vs {b.edge})")
    if a.count == 0 and b.count == 0:
        raise BothEmpty("IoU of two empty grids is undefined")
    n_union = len(np.unique(np.vstack([a.occupied, b.occupied]), axis=0))
    n_inter = a.count + b.count - n_union
    return n_inter / n_union


def relative_density(local: float, global_: float) -> float:
    """Local-window density over full-sequence density for one cluster."""
    if not global_ > 0:
        raise ZeroGlobalDensity(f"global density must be > 0, got {global_}")
    return local / global_
