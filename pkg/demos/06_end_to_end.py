"""
End-to-end run with plots
=========================

The whole pipeline against the reference scene, producing the same
artifacts the command line would: trajectory CSV, projection figure,
and an RMSE report. Equivalent CLI:

    skysift synth --preset s1 --output-dir out
    skysift detect --input out/scan.csv --output-dir out
    skysift eval out/trajectory.csv out/gt.csv
    skysift plot out/trajectory.csv --gt out/gt.csv
"""

import os

from skysift import (DbscanParams, ScoringParams, cluster_members, dbscan,
                     evaluate, extract_control_points, fit_spline, generate,
                     interpolate, plot_projections, save_trajectory_csv,
                     scene_s1, score_all_clusters, select_target, superimpose)

out_dir = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(out_dir, exist_ok=True)

seq, gt, oracle = generate(scene_s1())
full = superimpose(seq, seq.full_window())
labeling = dbscan(full, DbscanParams(), seq.full_window())
scores = score_all_clusters(seq, labeling, ScoringParams(), edge=0.5)
sel = select_target(scores)
controls = extract_control_points(seq, labeling, sel.cluster_id)
traj = interpolate(fit_spline(controls), seq.timestamps)

traj_path = os.path.join(out_dir, "trajectory_s1.csv")
save_trajectory_csv(traj, traj_path)

fig_path = os.path.join(out_dir, "trajectory_s1.svg")
plot_projections(fig_path, pred=traj, gt=gt,
                 samples=cluster_members(labeling, full, sel.cluster_id),
                 title="reference scene: prediction vs ground truth")

report = evaluate(traj, gt)
print(f"selected cluster {sel.cluster_id} "
      f"(confidence {sel.confidence:.1%}), "
      f"aggregate RMSE {report.aggregate:.3f} m")
print(f"wrote {traj_path}")
print(f"wrote {fig_path}")
