import json
import math

import numpy as np
import pytest

from conftest import cluster_full, make_sequence
from skysift import (DbscanParams, LabelingMismatch, NoClusters,
                     ScoreBreakdown, ScoringParams, audit_document,
                     combined_score, density_score, iou_score,
                     partition_windows, score_all_clusters, select_target)

LN_FLOOR = math.log(1e6)  # contribution of one fully disjoint frame pair


def mover_frames(n_frames, step=0.75, x0=10.0):
    """One point per frame marching along x by `step` (dyadic by default).

    With voxel edge 0.5 the footprint lands in a fresh voxel every frame,
    so every scheduled pair has IoU 0.
    """
    return [[[x0 + step * f, 0.0, 0.0]] for f in range(n_frames)]


def static_frames(n_frames):
    blob = [[0.0, 0.0, 0.0], [0.125, 0.0, 0.0], [0.0, 0.125, 0.0]]
    return [blob for _ in range(n_frames)]


def two_blob_scene(n_frames=4):
    """Static triple at the origin (cluster 0) plus a mover (cluster 1)."""
    frames = [static_frames(n_frames)[f] + mover_frames(n_frames)[f]
              for f in range(n_frames)]
    seq = make_sequence(frames)
    _, labeling = cluster_full(seq, eps=1.0, min_pts=1)
    assert labeling.n_clusters == 2
    return seq, labeling


class TestTermFunctions:
    def test_iou_all_ones_is_exactly_zero(self):
        assert iou_score([1.0, 1.0, 1.0], 1e-6) == 0.0

    def test_iou_zero_hits_the_floor(self):
        assert iou_score([0.0], 1e-6) == pytest.approx(LN_FLOOR, rel=1e-12)

    def test_iou_enumerated(self):
        assert iou_score([0.5, 0.25], 1e-6) == pytest.approx(3 * math.log(2),
                                                             rel=1e-12)

    def test_iou_empty(self):
        assert iou_score([], 1e-6) == 0.0

    def test_iou_monotone_nonincreasing(self):
        assert iou_score([0.5], 1e-6) > iou_score([0.6], 1e-6)
        assert iou_score([0.3, 0.3], 1e-6) > iou_score([0.3, 0.9], 1e-6)

    def test_density_single(self):
        assert density_score([1.0]) == pytest.approx(math.e, rel=1e-14)

    def test_density_enumerated(self):
        assert density_score([1.0, 2.0]) == pytest.approx(
            math.exp(1) + math.exp(2), rel=1e-12)

    def test_density_empty(self):
        assert density_score([]) == 0.0

    def test_combined_weighting(self):
        d, i = density_score([1.0, 2.0]), iou_score([0.5, 0.25], 1e-6)
        assert combined_score(d, i, 1.0) == d + i
        assert combined_score(d, i, 0.0) == d
        assert combined_score(d, i, 2.0) == d + 2.0 * i
        assert combined_score(d, i, 1.0) == pytest.approx(12.186779, abs=1e-5)


class TestPartitionWindows:
    def test_trailing_partial_window(self):
        spans = [(w.start, w.end) for w in partition_windows(25, 10)]
        assert spans == [(0, 9), (10, 19), (20, 24)]

    def test_single_window_when_len_covers_all(self):
        assert [(w.start, w.end) for w in partition_windows(5, 10)] == [(0, 4)]

    def test_exact_split(self):
        spans = [(w.start, w.end) for w in partition_windows(20, 10)]
        assert spans == [(0, 9), (10, 19)]

    def test_partition_property(self, rng):
        for _ in range(20):
            n = int(rng.integers(1, 60))
            wl = int(rng.integers(2, 15))
            covered = []
            for w in partition_windows(n, wl):
                covered.extend(range(w.start, w.end + 1))
            assert covered == list(range(n))


class TestScoreAllClusters:
    def test_two_blob_hand_computed(self):
        seq, labeling = two_blob_scene()
        params = ScoringParams(window_len=4)
        static, mover = score_all_clusters(seq, labeling, params, edge=0.5)

        # static: footprint never moves -> every pair IoU 1 -> exactly 0
        assert static.iou_term == 0.0
        assert static.global_voxel_count == 1
        assert static.n_points == 12
        assert static.global_density == 96.0

        # single full window: local density equals global, R is exactly 1
        e1 = float(np.exp(1.0))
        assert static.contributions[0].relative_density == 1.0
        assert static.density_term == e1

        # mover: one fresh voxel per frame, 3 consecutive disjoint pairs
        assert mover.iou_term == pytest.approx(3 * LN_FLOOR, rel=1e-12)
        assert mover.global_voxel_count == 4
        assert mover.global_density == 8.0
        assert mover.density_term == e1
        assert mover.total == pytest.approx(e1 + 3 * LN_FLOOR, rel=1e-12)
        assert [b.cluster_id for b in (static, mover)] == [0, 1]
        assert all(b.eligible for b in (static, mover))

    def test_absent_window_is_skipped(self):
        # mover exists only in frames 0..3 of 8; the static blob keeps the
        # later frames alive
        frames = [static_frames(8)[f] + (mover_frames(4)[f] if f < 4 else [])
                  for f in range(8)]
        seq = make_sequence(frames)
        _, labeling = cluster_full(seq, eps=1.0, min_pts=1)
        params = ScoringParams(window_len=4)
        _, mover = score_all_clusters(seq, labeling, params, edge=0.5)
        assert len(mover.contributions) == 2
        assert mover.contributions[1].relative_density is None
        assert mover.contributions[1].pair_ious == ()
        assert mover.density_term == float(np.exp(1.0))  # first window only

    def test_pair_needs_both_frames_present(self):
        # mover occupies frames 0 and 2 only; all_pairs must yield just (0, 2)
        frames = [static_frames(4)[f] + ([[10.0, 0.0, 0.0]] if f == 0 else
                                         [[10.75, 0.0, 0.0]] if f == 2 else [])
                  for f in range(4)]
        seq = make_sequence(frames)
        _, labeling = cluster_full(seq, eps=1.0, min_pts=1)
        params = ScoringParams(window_len=4, pair_schedule="all_pairs")
        _, mover = score_all_clusters(seq, labeling, params, edge=0.5)
        pairs = mover.contributions[0].pair_ious
        assert [(a, b) for a, b, _ in pairs] == [(0, 2)]

    @pytest.mark.parametrize("schedule,n_pairs", [
        ("consecutive", 9), ("all_pairs", 45), ("endpoints", 1)])
    def test_pair_schedules(self, schedule, n_pairs):
        seq = make_sequence(mover_frames(10))
        _, labeling = cluster_full(seq, eps=1.0, min_pts=1)
        params = ScoringParams(window_len=10, pair_schedule=schedule)
        (bd,) = score_all_clusters(seq, labeling, params, edge=0.5)
        assert len(bd.contributions[0].pair_ious) == n_pairs
        assert bd.iou_term == pytest.approx(n_pairs * LN_FLOOR, rel=1e-12)

    def test_voxel_prefilter(self):
        seq, labeling = two_blob_scene()
        params = ScoringParams(window_len=4, max_cluster_voxels=1)
        static, mover = score_all_clusters(seq, labeling, params, edge=0.5)
        assert static.eligible  # 1 voxel, under the cap
        assert not mover.eligible  # 4 voxels
        assert mover.exclusion_reason == "voxel_prefilter"
        assert mover.total == 0.0 and mover.contributions == ()

    def test_single_frame_cluster_ineligible(self):
        frames = [static_frames(4)[f] + ([[30.0, 0.0, 0.0]] if f == 0 else [])
                  for f in range(4)]
        seq = make_sequence(frames)
        _, labeling = cluster_full(seq, eps=1.0, min_pts=1)
        _, flash = score_all_clusters(seq, labeling,
                                      ScoringParams(window_len=4), edge=0.5)
        assert flash.n_frames_present == 1
        assert not flash.eligible
        assert flash.exclusion_reason == "too_few_frames"

    def test_noise_not_scored(self):
        # the stray at x=50 appears once, so the superposition cannot make
        # it self-supporting
        frames = [[[0.0, 0.0, 0.0], [0.125, 0.0, 0.0]]] * 3
        frames[0] = frames[0] + [[50.0, 0.0, 0.0]]
        seq = make_sequence(frames)
        _, labeling = cluster_full(seq, eps=0.5, min_pts=2)
        assert labeling.n_clusters == 1
        out = score_all_clusters(seq, labeling, ScoringParams(window_len=3),
                                 edge=0.5)
        assert len(out) == 1

    def test_labeling_from_other_sequence_rejected(self):
        seq, labeling = two_blob_scene()
        longer = make_sequence(static_frames(5))
        with pytest.raises(LabelingMismatch):
            score_all_clusters(longer, labeling, ScoringParams(), edge=0.5)

    def test_rerun_local_clustering_smoke(self):
        seq, labeling = two_blob_scene()
        dbp = DbscanParams(eps=1.0, min_pts=1)
        params = ScoringParams(window_len=4, rerun_local_clustering=True)
        out = score_all_clusters(seq, labeling, params, edge=0.5,
                                 dbscan_params=dbp)
        assert select_target(out).cluster_id == 1

    def test_rerun_requires_dbscan_params(self):
        seq, labeling = two_blob_scene()
        params = ScoringParams(window_len=4, rerun_local_clustering=True)
        with pytest.raises(ValueError):
            score_all_clusters(seq, labeling, params, edge=0.5)


class TestTranslationInvariance:
    def test_translated_twin_scores_bit_identical(self):
        # two movers with the same shape, one shifted by a lattice multiple;
        # dyadic coordinates keep every arithmetic step exact
        n, shift = 4, 64.0
        frames = []
        for f in range(n):
            x = 10.0 + 0.75 * f
            frames.append([[x, 0.0, 0.0], [x + 0.125, 0.25, 0.0],
                           [x + shift, 0.0, 0.0], [x + shift + 0.125, 0.25, 0.0]])
        seq = make_sequence(frames)
        _, labeling = cluster_full(seq, eps=1.0, min_pts=1)
        assert labeling.n_clusters == 2
        a, b = score_all_clusters(seq, labeling, ScoringParams(window_len=4),
                                  edge=0.5)
        for field in ("iou_term", "density_term", "total", "global_density",
                      "global_voxel_count", "n_points", "n_frames_present"):
            assert getattr(a, field) == getattr(b, field), field

    def test_whole_scene_lattice_translation(self):
        seq, labeling = two_blob_scene()
        shift = np.array([3.0, -7.0, 12.0]) * 0.5
        moved = make_sequence(
            [[list(np.asarray(p) + shift) for p in fr]
             for fr in (static_frames(4)[f] + mover_frames(4)[f]
                        for f in range(4))])
        _, labeling2 = cluster_full(moved, eps=1.0, min_pts=1)
        np.testing.assert_array_equal(labeling.labels, labeling2.labels)
        params = ScoringParams(window_len=4)
        for s0, s1 in zip(score_all_clusters(seq, labeling, params, edge=0.5),
                          score_all_clusters(moved, labeling2, params, edge=0.5)):
            for field in ("iou_term", "density_term", "total",
                          "global_density", "global_voxel_count"):
                assert getattr(s0, field) == getattr(s1, field), field


def bd(cid, total, voxels=10, eligible=True):
    return ScoreBreakdown(
        cluster_id=cid, iou_term=0.0, density_term=total, total=total,
        iou_weight=1.0, n_points=5, n_frames_present=3,
        global_voxel_count=voxels, global_density=1.0, eligible=eligible,
        exclusion_reason=None if eligible else "voxel_prefilter",
        contributions=())


class TestSelectTarget:
    def test_argmax(self):
        sel = select_target([bd(0, 5.0), bd(1, 12.2), bd(2, 3.1)])
        assert sel.cluster_id == 1
        assert sel.confidence == pytest.approx((12.2 - 5.0) / 12.2, rel=1e-12)
        assert not sel.low_confidence

    def test_argmax_invariant_under_shared_offset(self):
        totals = [5.0, 12.2, 3.1]
        base = select_target([bd(i, t) for i, t in enumerate(totals)])
        shifted = select_target([bd(i, t + 100.0)
                                 for i, t in enumerate(totals)])
        assert base.cluster_id == shifted.cluster_id

    def test_tie_prefers_smaller_footprint(self):
        sel = select_target([bd(0, 7.0, voxels=100), bd(1, 7.0, voxels=4)])
        assert sel.cluster_id == 1

    def test_tie_then_lower_id(self):
        assert select_target([bd(1, 7.0), bd(0, 7.0)]).cluster_id == 0

    def test_ineligible_never_wins(self):
        sel = select_target([bd(0, 100.0, eligible=False), bd(1, 5.0),
                             bd(2, 3.0)])
        assert sel.cluster_id == 1

    def test_no_eligible_clusters(self):
        with pytest.raises(NoClusters):
            select_target([bd(0, 4.0, eligible=False)])
        with pytest.raises(NoClusters):
            select_target([])

    def test_single_candidate_is_low_confidence(self):
        sel = select_target([bd(0, 50.0)])
        assert sel.confidence == 0.0 and sel.low_confidence

    def test_zero_best_is_low_confidence(self):
        sel = select_target([bd(0, 0.0), bd(1, 0.0, voxels=3)])
        assert sel.cluster_id == 1
        assert sel.confidence == 0.0 and sel.low_confidence

    def test_margin_threshold(self):
        scores = [bd(0, 10.0), bd(1, 9.5)]
        assert not select_target(scores, min_margin=0.01).low_confidence
        assert select_target(scores, min_margin=0.2).low_confidence


class TestAuditDocument:
    def test_round_trips_through_json(self):
        seq, labeling = two_blob_scene()
        params = ScoringParams(window_len=4)
        scores = score_all_clusters(seq, labeling, params, edge=0.5)
        sel = select_target(scores)
        doc = audit_document(scores, sel, params, edge=0.5)
        again = json.loads(json.dumps(doc))
        assert again["voxel_edge"] == 0.5
        assert again["params"]["window_len"] == 4
        assert [c["cluster_id"] for c in again["clusters"]] == [0, 1]
        assert again["selection"]["cluster_id"] == 1
        assert again["clusters"][1]["windows"][0]["pairs"][0]["iou"] == 0.0

    def test_no_selection(self):
        doc = audit_document([], None, ScoringParams(), edge=0.5)
        assert doc["selection"] is None and doc["clusters"] == []
