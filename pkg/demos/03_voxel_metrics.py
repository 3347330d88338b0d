"""
Voxel footprints: where static and moving clusters diverge
==========================================================

Two per-cluster measurements drive the selection score. Frame-to-frame
footprint IoU: a wall re-occupies the same cells every frame, a mover
keeps vacating them. Relative density: a wall's full-sequence stack is
much denser than any short window of it, a mover never accumulates.
"""

import numpy as np

from skysift import (DbscanParams, cluster_members, dbscan, density,
                     generate, restrict_to_frame, scene_s1, superimpose,
                     voxel_iou, voxelize)

EDGE = 0.5

seq, gt, oracle = generate(scene_s1())
full = superimpose(seq, seq.full_window())
labeling = dbscan(full, DbscanParams(), seq.full_window())
target_k = oracle.uav_cluster(labeling)

for k in range(labeling.n_clusters):
    pts = cluster_members(labeling, full, k)
    grid = voxelize(pts, EDGE)
    ious = []
    for f in range(seq.n_frames - 1):
        a = voxelize(restrict_to_frame(pts, f), EDGE)
        b = voxelize(restrict_to_frame(pts, f + 1), EDGE)
        if a.count and b.count:
            ious.append(voxel_iou(a, b))
    label = "target" if k == target_k else "static"
    print(f"cluster {k} ({label}):")
    print(f"  global footprint {grid.count} voxels, "
          f"density {density(pts, EDGE):.0f} pts/m^3")
    print(f"  consecutive-frame IoU: mean {np.mean(ious):.3f}, "
          f"max {np.max(ious):.3f} over {len(ious)} pairs")

# density of a short window vs the whole recording, for the wall
wall_k = 1 - target_k if labeling.n_clusters == 2 else 0
wall = cluster_members(labeling, full, wall_k)
early = wall.take(np.flatnonzero(wall.frame_index < 10))
print(f"wall density, frames 0..9 only: {density(early, EDGE):.0f} pts/m^3 "
      f"vs full stack {density(wall, EDGE):.0f} pts/m^3")
