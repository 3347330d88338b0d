"""Command-line pipeline driver.

Four subcommands cover the workflow end to end:

* ``detect``: scan sequence in, clustered and scored, winning cluster's
  spline trajectory out (plus a full score audit and run metadata).
* ``eval``: RMSE of a predicted trajectory against ground truth.
* ``synth``: render a synthetic scene to scan + ground-truth files.
* ``plot``: SVG with XY / XZ / YZ projections of points and trajectories.

Exit codes: 0 success; 2 invalid config or parameters; 3 unreadable or
unusable input; 4 detection completed with a low-confidence margin;
5 evaluation found no overlapping samples.
"""

from __future__ import annotations

import argparse
import hashlib
import itertools
import json
import os
import sys
import time

import yaml

from . import __version__
from .clustering import cluster_members, dbscan
from .config import (OVERRIDE_KEYS, PipelineConfig, apply_overrides,
                     config_to_dict, load_config)
from .errors import (EmptyCluster, EmptyInput, EmptyPairs, EmptyQuery,
                     EmptySequence, InvalidConfig, LabelingMismatch,
                     MalformedRecord, NoClusters, NonMonotonicTimestamps,
                     NoOverlap, TooFewFrames, UnknownClusterId)
from .evaluation import evaluate, save_report_json
from .plotting import plot_projections
from .pointcloud import (load_points_csv, load_sequence, save_points_csv,
                         save_sequence, superimpose)
from .scoring import audit_document, score_all_clusters, select_target
from .synthetic import NAMED_SCENES, generate, scene_config_from_dict, \
    scene_config_to_dict
from .trajectory import (extract_control_points, fit_spline, interpolate,
                         load_trajectory_csv, save_trajectory_csv)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INPUT = 3
EXIT_LOW_CONFIDENCE = 4
EXIT_NO_OVERLAP = 5

_EXIT_CODE_HELP = (
    "exit codes: 0 success, 2 config error, 3 input error, "
    "4 low-confidence detection, 5 evaluation overlap failure"
)

# Errors that mean "the data, not the invocation, is unusable".
_INPUT_ERRORS = (OSError, MalformedRecord, EmptySequence,
                 NonMonotonicTimestamps, EmptyInput, EmptyCluster, NoClusters,
                 TooFewFrames, EmptyQuery, UnknownClusterId, LabelingMismatch,
                 EmptyPairs)


def _hash_path(path) -> str:
    """sha256 of a file, or of a directory's sorted names and contents."""
    h = hashlib.sha256()
    if os.path.isdir(path):
        for name in sorted(os.listdir(path)):
            full = os.path.join(path, name)
            if os.path.isfile(full):
                h.update(name.encode())
                with open(full, "rb") as fh:
                    h.update(fh.read())
    else:
        with open(path, "rb") as fh:
            h.update(fh.read())
    return h.hexdigest()


def _write_json(doc: dict, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_detect(cfg: PipelineConfig) -> int:
    """Full detection pipeline for one configured run."""
    if cfg.input is None:
        raise InvalidConfig("no input: set 'input' in the config or pass --input")
    timings = {}
    t0 = time.perf_counter()
    seq = load_sequence(cfg.input, cfg.format)
    timings["load_s"] = time.perf_counter() - t0

    t1 = time.perf_counter()
    full = superimpose(seq, seq.full_window())
    labeling = dbscan(full, cfg.dbscan, seq.full_window())
    timings["cluster_s"] = time.perf_counter() - t1

    t2 = time.perf_counter()
    scores = score_all_clusters(seq, labeling, cfg.scoring, cfg.voxel_edge,
                                cfg.dbscan)
    selection = select_target(scores, cfg.min_margin)
    timings["score_s"] = time.perf_counter() - t2

    t3 = time.perf_counter()
    controls = extract_control_points(seq, labeling, selection.cluster_id,
                                      cfg.outlier_gate, cfg.reducer)
    model = fit_spline(controls, cfg.max_degree)
    traj = interpolate(model, seq.timestamps)
    timings["fit_s"] = time.perf_counter() - t3
    timings["total_s"] = time.perf_counter() - t0

    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    traj_path = os.path.join(out, "trajectory.csv")
    audit_path = os.path.join(out, "audit.json")
    samples_path = os.path.join(out, "samples.csv")
    save_trajectory_csv(traj, traj_path)
    _write_json(audit_document(scores, selection, cfg.scoring, cfg.voxel_edge),
                audit_path)
    save_points_csv(cluster_members(labeling, full, selection.cluster_id),
                    samples_path)
    _write_json({
        "command": "detect",
        "version": __version__,
        "config": config_to_dict(cfg),
        "input_sha256": _hash_path(cfg.input),
        "n_points": len(full),
        "n_clusters": labeling.n_clusters,
        "selection": {"cluster_id": selection.cluster_id,
                      "confidence": selection.confidence,
                      "low_confidence": selection.low_confidence},
        "spline_degree": model.degree,
        "n_control_points": len(controls.t),
        "outputs": {"trajectory": "trajectory.csv", "audit": "audit.json",
                    "samples": "samples.csv"},
        "timings": timings,
    }, os.path.join(out, "metadata.json"))

    flag = "  [LOW CONFIDENCE]" if selection.low_confidence else ""
    print(f"frames={seq.n_frames} points={len(full)} "
          f"clusters={labeling.n_clusters} selected={selection.cluster_id} "
          f"confidence={selection.confidence:.3f}{flag}")
    print(f"wrote {traj_path}, {audit_path}, {samples_path}")
    if selection.low_confidence:
        print("warning: winning margin below min_margin; treat the detection "
              "as unreliable", file=sys.stderr)
        return EXIT_LOW_CONFIDENCE
    return EXIT_OK


def _parse_sweeps(specs) -> list:
    sweeps = []
    for spec in specs or ():
        key, sep, rest = spec.partition("=")
        if not sep or not rest:
            raise InvalidConfig(f"--sweep wants KEY=V1,V2,..., got {spec!r}")
        if key not in OVERRIDE_KEYS:
            raise InvalidConfig(f"--sweep key {key!r} unknown; valid: "
                                f"{sorted(OVERRIDE_KEYS)}")
        sweeps.append((key, rest.split(",")))
    return sweeps


def _collect_overrides(args) -> dict:
    return {key: getattr(args, key) for key in OVERRIDE_KEYS
            if getattr(args, key, None) is not None}


def cmd_detect(args) -> int:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    cfg = apply_overrides(cfg, _collect_overrides(args))
    sweeps = _parse_sweeps(args.sweep)
    if not sweeps:
        return run_detect(cfg)

    base_dir = cfg.output_dir
    worst = EXIT_OK
    for combo in itertools.product(*[[(k, v) for v in vals]
                                     for k, vals in sweeps]):
        sub = "_".join(f"{k}={v}" for k, v in combo).replace(os.sep, "-")
        run_cfg = apply_overrides(cfg, dict(combo))
        run_cfg = apply_overrides(run_cfg,
                                  {"output_dir": os.path.join(base_dir, sub)})
        print(f"--- sweep {sub}")
        worst = max(worst, run_detect(run_cfg))
    return worst


def cmd_eval(args) -> int:
    pred = load_trajectory_csv(args.pred)
    gt = load_trajectory_csv(args.gt)
    report = evaluate(pred, gt, args.max_dt)
    print(f"{'dx (m)':>10} {'dy (m)':>10} {'dz (m)':>10} {'rmse (m)':>10} "
          f"{'pairs':>7} {'dropped':>8}")
    print(f"{report.dx:>10.6f} {report.dy:>10.6f} {report.dz:>10.6f} "
          f"{report.aggregate:>10.6f} {report.n_pairs:>7d} {report.dropped:>8d}")
    if args.report:
        save_report_json(report, args.report)
        print(f"wrote {args.report}")
    return EXIT_OK


def cmd_synth(args) -> int:
    if (args.scene is None) == (args.preset is None):
        raise InvalidConfig("give exactly one of SCENE_CONFIG or --preset")
    if args.preset:
        builder = NAMED_SCENES[args.preset]
        scene = builder(args.seed) if args.seed is not None else builder()
    else:
        try:
            with open(args.scene, "r", encoding="utf-8") as fh:
                doc = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise InvalidConfig(f"scene config is not valid YAML: {exc}") from exc
        if args.seed is not None:
            doc = dict(doc or {}, rng_seed=args.seed)
        scene = scene_config_from_dict(doc)

    seq, gt, oracle = generate(scene)
    out = args.output_dir
    os.makedirs(out, exist_ok=True)
    if args.format == "csv":
        scan_path = os.path.join(out, "scan.csv")
    else:
        scan_path = os.path.join(out, "scan_pcd")
    save_sequence(seq, scan_path, args.format)
    gt_path = os.path.join(out, "gt.csv")
    save_trajectory_csv(gt, gt_path)
    counts = oracle.counts()
    _write_json({
        "command": "synth",
        "version": __version__,
        "scene": scene_config_to_dict(scene),
        "n_frames": seq.n_frames,
        "point_counts": counts,
        "outputs": {"scan": os.path.basename(scan_path), "gt": "gt.csv"},
    }, os.path.join(out, "metadata.json"))
    print(f"frames={seq.n_frames} static={counts['static']} "
          f"uav={counts['uav']} clutter={counts['clutter']}")
    print(f"wrote {scan_path}, {gt_path}")
    return EXIT_OK


def cmd_plot(args) -> int:
    preds = [load_trajectory_csv(p) for p in args.trajectories]
    gt = load_trajectory_csv(args.gt) if args.gt else None
    samples = load_points_csv(args.samples) if args.samples else None
    plot_projections(args.output, pred=preds, gt=gt, samples=samples,
                     title=args.title)
    print(f"wrote {args.output}")
    return EXIT_OK


def _add_override_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", help="scan sequence path (file or PCD directory)")
    p.add_argument("--format", choices=["csv", "pcd"], help="input format")
    p.add_argument("--output-dir", help="directory for run outputs")
    p.add_argument("--eps", type=float, help="clustering neighborhood radius, m")
    p.add_argument("--min-pts", type=int, help="clustering core threshold")
    p.add_argument("--voxel-edge", type=float, help="voxel edge length, m")
    p.add_argument("--iou-weight", type=float,
                   help="weight of the IoU term in the combined score")
    p.add_argument("--iou-floor", type=float,
                   help="IoU clamp applied before the log")
    p.add_argument("--pair-schedule",
                   choices=["consecutive", "all_pairs", "endpoints"],
                   help="frame pairs scored inside each window")
    p.add_argument("--window-len", type=int, help="frames per scoring window")
    p.add_argument("--rerun-local-clustering", metavar="BOOL",
                   help="re-cluster each window instead of restricting labels")
    p.add_argument("--max-cluster-voxels", type=int,
                   help="pre-filter threshold on a cluster's voxel footprint")
    p.add_argument("--outlier-gate", type=float,
                   help="control-point outlier distance gate, m")
    p.add_argument("--reducer", choices=["centroid", "median"],
                   help="per-frame control point reduction")
    p.add_argument("--max-degree", type=int, help="spline degree cap")
    p.add_argument("--min-margin", type=float,
                   help="relative margin below which a detection is low-confidence")
    p.add_argument("--max-dt", type=float,
                   help="evaluation pairing tolerance, s")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skysift",
        description="Unsupervised UAV trajectory estimation from sparse "
                    "LiDAR scan sequences.",
        epilog=_EXIT_CODE_HELP)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="run the detection pipeline",
                       epilog=_EXIT_CODE_HELP + "; with --sweep, the exit "
                       "status is the most severe across combinations")
    p.add_argument("--config", help="YAML run configuration")
    _add_override_flags(p)
    p.add_argument("--sweep", action="append", metavar="KEY=V1,V2",
                   help="run every combination of swept values; repeatable")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="RMSE against a ground-truth trajectory",
                       epilog=_EXIT_CODE_HELP)
    p.add_argument("pred", help="predicted trajectory CSV")
    p.add_argument("gt", help="ground-truth trajectory CSV")
    p.add_argument("--max-dt", type=float, default=0.5,
                   help="drop GT samples farther than this outside the "
                        "prediction span, s (default 0.5)")
    p.add_argument("--report", help="also write the report JSON here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic scene",
                       epilog=_EXIT_CODE_HELP)
    p.add_argument("scene", nargs="?", help="YAML scene description")
    p.add_argument("--preset", choices=sorted(NAMED_SCENES),
                   help="use a built-in scene instead of a YAML file")
    p.add_argument("--seed", type=int, help="override the scene rng seed")
    p.add_argument("--output-dir", default="out", help="output directory")
    p.add_argument("--format", choices=["csv", "pcd"], default="csv",
                   help="scan output format")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("plot", help="render trajectory projections to SVG",
                       epilog=_EXIT_CODE_HELP)
    p.add_argument("trajectories", nargs="+",
                   help="predicted trajectory CSV file(s)")
    p.add_argument("--gt", help="ground-truth trajectory CSV")
    p.add_argument("--samples", help="scan-schema CSV of raw target points")
    p.add_argument("--output", default="trajectory.svg", help="output SVG path")
    p.add_argument("--title", help="figure title")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvalidConfig as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoOverlap as exc:
        print(f"evaluation error: {exc}", file=sys.stderr)
        return EXIT_NO_OVERLAP
    except _INPUT_ERRORS as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
