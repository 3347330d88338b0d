"""
From selected cluster to smooth trajectory
==========================================

The winning cluster is reduced to one control point per frame, an
interpolating spline goes through the control points, and positions are
read off at the scan timestamps. Accuracy is judged against the
generator's exact flight path.
"""

import numpy as np

from skysift import (DbscanParams, ScoringParams, dbscan, evaluate,
                     extract_control_points, fit_spline, generate,
                     interpolate, scene_s1, score_all_clusters,
                     select_target, superimpose)

seq, gt, oracle = generate(scene_s1())
full = superimpose(seq, seq.full_window())
labeling = dbscan(full, DbscanParams(), seq.full_window())
scores = score_all_clusters(seq, labeling, ScoringParams(), edge=0.5)
sel = select_target(scores)

controls = extract_control_points(seq, labeling, sel.cluster_id)
print(f"{len(controls)} control points from {seq.n_frames} frames")

model = fit_spline(controls)  # cubic, not-a-knot ends
print(f"spline degree {model.degree}, "
      f"domain {model.t_min:.2f}..{model.t_max:.2f} s")

traj = interpolate(model, seq.timestamps)
report = evaluate(traj, gt)
print(f"RMSE x/y/z: {report.dx:.3f} / {report.dy:.3f} / {report.dz:.3f} m")
print(f"aggregate: {report.aggregate:.3f} m over {report.n_pairs} pairs")

# per-frame miss distance against the true path
miss = np.linalg.norm(traj.xyz - gt.xyz, axis=1)
print(f"worst frame: {miss.max():.3f} m at t={gt.t[miss.argmax()]:.2f} s")
