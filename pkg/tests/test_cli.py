import json

import numpy as np
import pytest
import yaml

from skysift import Trajectory, load_trajectory_csv, save_trajectory_csv
from skysift.cli import main

SCENE = {
    "rng_seed": 5,
    "duration": 2.0,
    "frame_rate": 10.0,
    "uav_path": {"type": "polyline",
                 "waypoints": [[30.0, 0.0, 8.0], [50.0, 0.0, 8.0]],
                 "speed": 8.0},
    "uav_returns_per_frame": 3.0,
    "noise_sigma": 0.05,
    "static_structures": [{"center": [20.0, 0.0, 2.5],
                           "dims": [0.5, 8.0, 5.0], "rate": 80.0}],
    "clutter_rate": 1.0,
}


@pytest.fixture(scope="module")
def scene_yaml(tmp_path_factory):
    p = tmp_path_factory.mktemp("scene") / "scene.yaml"
    p.write_text(yaml.safe_dump(SCENE))
    return p


@pytest.fixture(scope="module")
def synth_dir(scene_yaml, tmp_path_factory):
    d = tmp_path_factory.mktemp("synth")
    assert main(["synth", str(scene_yaml), "--output-dir", str(d)]) == 0
    return d


@pytest.fixture(scope="module")
def detect_dir(synth_dir, tmp_path_factory):
    d = tmp_path_factory.mktemp("detect")
    code = main(["detect", "--input", str(synth_dir / "scan.csv"),
                 "--output-dir", str(d)])
    assert code == 0
    return d


class TestSynth:
    def test_outputs(self, synth_dir):
        assert (synth_dir / "scan.csv").exists()
        assert (synth_dir / "gt.csv").exists()
        meta = json.loads((synth_dir / "metadata.json").read_text())
        assert meta["command"] == "synth"
        assert meta["n_frames"] == 20
        assert meta["point_counts"]["uav"] > 0

    def test_deterministic(self, scene_yaml, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["synth", str(scene_yaml), "--output-dir", str(a)]) == 0
        assert main(["synth", str(scene_yaml), "--output-dir", str(b)]) == 0
        assert (a / "scan.csv").read_bytes() == (b / "scan.csv").read_bytes()
        assert (a / "gt.csv").read_bytes() == (b / "gt.csv").read_bytes()

    def test_preset_with_seed(self, tmp_path):
        d = tmp_path / "s"
        assert main(["synth", "--preset", "s2", "--seed", "99",
                     "--output-dir", str(d)]) == 0
        meta = json.loads((d / "metadata.json").read_text())
        assert meta["scene"]["rng_seed"] == 99
        assert meta["point_counts"]["uav"] == 0

    def test_scene_and_preset_are_exclusive(self, scene_yaml, tmp_path):
        assert main(["synth", str(scene_yaml), "--preset", "s1",
                     "--output-dir", str(tmp_path)]) == 2
        assert main(["synth", "--output-dir", str(tmp_path)]) == 2

    def test_unknown_scene_key(self, tmp_path):
        p = tmp_path / "bad.yaml"
        p.write_text(yaml.safe_dump(dict(SCENE, wind=3.0)))
        assert main(["synth", str(p), "--output-dir", str(tmp_path)]) == 2

    def test_missing_scene_file(self, tmp_path):
        assert main(["synth", str(tmp_path / "absent.yaml"),
                     "--output-dir", str(tmp_path)]) == 3

    def test_seed_overrides_scene_file(self, scene_yaml, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["synth", str(scene_yaml), "--seed", "77",
                     "--output-dir", str(a)]) == 0
        assert main(["synth", str(scene_yaml), "--output-dir", str(b)]) == 0
        assert (a / "scan.csv").read_bytes() != (b / "scan.csv").read_bytes()


class TestDetect:
    def test_outputs(self, detect_dir, synth_dir):
        traj = load_trajectory_csv(detect_dir / "trajectory.csv")
        assert len(traj) == 20
        audit = json.loads((detect_dir / "audit.json").read_text())
        meta = json.loads((detect_dir / "metadata.json").read_text())
        assert audit["selection"]["cluster_id"] == \
            meta["selection"]["cluster_id"]
        assert not meta["selection"]["low_confidence"]
        assert len(meta["input_sha256"]) == 64
        assert set(meta["timings"]) == {"load_s", "cluster_s", "score_s",
                                        "fit_s", "total_s"}
        assert (detect_dir / "samples.csv").exists()

    def test_recovers_ground_truth(self, detect_dir, synth_dir, tmp_path):
        rep = tmp_path / "report.json"
        assert main(["eval", str(detect_dir / "trajectory.csv"),
                     str(synth_dir / "gt.csv"), "--report", str(rep)]) == 0
        doc = json.loads(rep.read_text())
        assert doc["aggregate"] < 0.25

    def test_byte_identical_rerun(self, synth_dir, detect_dir, tmp_path):
        d = tmp_path / "again"
        assert main(["detect", "--input", str(synth_dir / "scan.csv"),
                     "--output-dir", str(d)]) == 0
        for name in ("trajectory.csv", "audit.json", "samples.csv"):
            assert (d / name).read_bytes() == \
                (detect_dir / name).read_bytes(), name

    def test_config_file_and_flag_priority(self, synth_dir, tmp_path):
        cfg = tmp_path / "run.yaml"
        cfg.write_text(yaml.safe_dump({
            "input": "does/not/exist.csv",
            "output_dir": str(tmp_path / "ignored"),
        }))
        out = tmp_path / "flagged"
        code = main(["detect", "--config", str(cfg),
                     "--input", str(synth_dir / "scan.csv"),
                     "--output-dir", str(out)])
        assert code == 0
        assert (out / "trajectory.csv").exists()
        assert not (tmp_path / "ignored").exists()

    def test_missing_input(self, tmp_path):
        assert main(["detect", "--input", str(tmp_path / "nope.csv"),
                     "--output-dir", str(tmp_path)]) == 3

    def test_no_input_configured(self, tmp_path):
        assert main(["detect", "--output-dir", str(tmp_path)]) == 2

    def test_invalid_parameter(self, synth_dir, tmp_path):
        assert main(["detect", "--input", str(synth_dir / "scan.csv"),
                     "--output-dir", str(tmp_path),
                     "--window-len", "1"]) == 2

    def test_low_confidence_exit(self, tmp_path, capsys):
        d = tmp_path / "s2"
        assert main(["synth", "--preset", "s2", "--output-dir", str(d)]) == 0
        code = main(["detect", "--input", str(d / "scan.csv"),
                     "--output-dir", str(tmp_path / "out")])
        assert code == 4
        assert "LOW CONFIDENCE" in capsys.readouterr().out
        # outputs still written for inspection
        assert (tmp_path / "out" / "trajectory.csv").exists()

    def test_sweep(self, synth_dir, tmp_path, capsys):
        base = tmp_path / "sweep"
        code = main(["detect", "--input", str(synth_dir / "scan.csv"),
                     "--output-dir", str(base), "--sweep", "eps=1.0,1.5"])
        assert code == 0
        assert "--- sweep eps=1.0" in capsys.readouterr().out
        for sub in ("eps=1.0", "eps=1.5"):
            assert (base / sub / "trajectory.csv").exists()
            assert (base / sub / "metadata.json").exists()

    def test_sweep_bad_key(self, synth_dir, tmp_path):
        assert main(["detect", "--input", str(synth_dir / "scan.csv"),
                     "--output-dir", str(tmp_path),
                     "--sweep", "metric=a,b"]) == 2

    def test_pcd_pipeline_matches_csv(self, scene_yaml, detect_dir, tmp_path):
        synth = tmp_path / "synth"
        assert main(["synth", str(scene_yaml), "--format", "pcd",
                     "--output-dir", str(synth)]) == 0
        assert (synth / "scan_pcd" / "000000.pcd").exists()
        out = tmp_path / "out"
        assert main(["detect", "--input", str(synth / "scan_pcd"),
                     "--format", "pcd", "--output-dir", str(out)]) == 0
        assert (out / "trajectory.csv").read_bytes() == \
            (detect_dir / "trajectory.csv").read_bytes()


class TestEval:
    def test_identical_is_zero(self, synth_dir, capsys):
        gt = str(synth_dir / "gt.csv")
        assert main(["eval", gt, gt]) == 0
        out = capsys.readouterr().out
        assert "0.000000" in out

    def test_constant_offset_prints_reported_value(self, synth_dir, tmp_path,
                                                   capsys):
        gt = load_trajectory_csv(synth_dir / "gt.csv")
        shifted = Trajectory(t=gt.t, xyz=gt.xyz + [0.72, 0.85, 0.76])
        pred = tmp_path / "pred.csv"
        save_trajectory_csv(shifted, pred)
        rep = tmp_path / "report.json"
        assert main(["eval", str(pred), str(synth_dir / "gt.csv"),
                     "--report", str(rep)]) == 0
        assert "1.3485" in capsys.readouterr().out
        doc = json.loads(rep.read_text())
        assert doc["aggregate"] == pytest.approx(1.3485, abs=5e-4)
        assert doc["dx"] == pytest.approx(0.72, rel=1e-9)

    def test_no_overlap_exit(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        t = np.array([0.0, 1.0])
        save_trajectory_csv(Trajectory(t=t, xyz=np.zeros((2, 3))), a)
        save_trajectory_csv(Trajectory(t=t + 50.0, xyz=np.zeros((2, 3))), b)
        assert main(["eval", str(a), str(b)]) == 5

    def test_max_dt_drops_outliers(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        save_trajectory_csv(Trajectory(t=np.array([0.0, 1.0]),
                                       xyz=np.zeros((2, 3))), a)
        save_trajectory_csv(Trajectory(t=np.array([0.5, 9.0]),
                                       xyz=np.zeros((2, 3))), b)
        rep = tmp_path / "rep.json"
        assert main(["eval", str(a), str(b), "--max-dt", "0.25",
                     "--report", str(rep)]) == 0
        assert json.loads(rep.read_text())["dropped"] == 1

    def test_malformed_trajectory(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("t,x,y,z\n0,oops,0,0\n")
        assert main(["eval", str(p), str(p)]) == 3


class TestPlot:
    def test_all_layers(self, detect_dir, synth_dir, tmp_path):
        fig = tmp_path / "fig.svg"
        code = main(["plot", str(detect_dir / "trajectory.csv"),
                     "--gt", str(synth_dir / "gt.csv"),
                     "--samples", str(detect_dir / "samples.csv"),
                     "--output", str(fig), "--title", "run 5"])
        assert code == 0
        head = fig.read_bytes()[:200]
        assert b"<?xml" in head or b"<svg" in head

    def test_prediction_only(self, detect_dir, tmp_path):
        fig = tmp_path / "fig.svg"
        assert main(["plot", str(detect_dir / "trajectory.csv"),
                     "--output", str(fig)]) == 0
        assert fig.stat().st_size > 0

    def test_two_predictions(self, detect_dir, synth_dir, tmp_path):
        fig = tmp_path / "fig.svg"
        assert main(["plot", str(detect_dir / "trajectory.csv"),
                     str(synth_dir / "gt.csv"), "--output", str(fig)]) == 0
        assert fig.exists()

    def test_empty_trajectory(self, tmp_path):
        p = tmp_path / "empty.csv"
        p.write_text("t,x,y,z\n")
        assert main(["plot", str(p),
                     "--output", str(tmp_path / "fig.svg")]) == 3


class TestParser:
    def test_version(self, capsys):
        with pytest.raises(SystemExit) as ei:
            main(["--version"])
        assert ei.value.code == 0
        assert capsys.readouterr().out.strip()

    def test_subcommand_required(self):
        with pytest.raises(SystemExit):
            main([])
