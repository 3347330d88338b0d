"""
Scoring clusters and selecting the moving target
================================================

Each cluster's evidence is summed over windows of the sequence: exp of
the window's relative density, plus a weighted log-inverse IoU per
scheduled frame pair. The mover dominates the IoU side because its
footprint leaves its old voxels every frame.
"""

from skysift import (DbscanParams, ScoringParams, dbscan, generate,
                     scene_s1, score_all_clusters, select_target,
                     superimpose)

seq, gt, oracle = generate(scene_s1())
full = superimpose(seq, seq.full_window())
labeling = dbscan(full, DbscanParams(), seq.full_window())

params = ScoringParams()  # consecutive pairs, window_len 10, weight 1.0
scores = score_all_clusters(seq, labeling, params, edge=0.5)

print(f"{'id':>3} {'points':>7} {'voxels':>7} {'iou term':>10} "
      f"{'dens term':>10} {'total':>10}  eligible")
for s in scores:
    print(f"{s.cluster_id:>3} {s.n_points:>7} {s.global_voxel_count:>7} "
          f"{s.iou_term:>10.2f} {s.density_term:>10.2f} {s.total:>10.2f}  "
          f"{s.eligible if s.eligible else s.exclusion_reason}")

sel = select_target(scores)
flag = " (LOW CONFIDENCE)" if sel.low_confidence else ""
print(f"\nselected cluster {sel.cluster_id}, "
      f"margin over runner-up {sel.confidence:.1%}{flag}")
print(f"oracle says cluster {oracle.uav_cluster(labeling)}")

# window-level audit trail for the winner
best = scores[sel.cluster_id]
for c in best.contributions:
    ious = [f"{iou:.2f}" for _, _, iou in c.pair_ious[:4]]
    print(f"  frames {c.start:>2}..{c.end:<2} R={c.relative_density:.3f} "
          f"pair IoUs {', '.join(ious)}{' ...' if len(c.pair_ious) > 4 else ''}")
