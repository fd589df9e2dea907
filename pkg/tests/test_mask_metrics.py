from __future__ import annotations

import math

import numpy as np
import pytest

from sca_eval.data import Category, Source, Track, TrackObservation
from sca_eval.errors import MalformedRle
from sca_eval.mask_metrics import MaskDiffRow, mask_area, mask_diff_table
from sca_eval.rle import decode_rle, encode_rle


def area_track(iid, areas, source=None, category=Category.HUMAN, clip="c1"):
    """areas: list of int areas or None for absent frames."""
    obs = []
    for i, a in enumerate(areas):
        if a is None:
            obs.append(TrackObservation(i, False))
        else:
            obs.append(TrackObservation(i, True, centroid=np.array([0.0, 0.0]), mask_area=a))
    return Track(clip, source or Source.ground_truth(), iid, category, tuple(obs))


def model(iid, areas, **kw):
    return area_track(iid, areas, source=Source.model("m"), **kw)


# --- mask_area ------------------------------------------------------------------


def test_all_zero_mask():
    assert mask_area("0:6") == 0


def test_full_grid():
    assert mask_area("1:6", expected_total=6) == 6


def test_area_matches_dense_oracle():
    rng = np.random.default_rng(307)
    for _ in range(30):
        mask = (rng.random(size=(12, 20)) < 0.35).astype(np.uint8)
        text = encode_rle(mask)
        dense = decode_rle(text, width=20)
        assert mask_area(text) == int(dense.sum())


def test_wrong_total_rejected():
    with pytest.raises(MalformedRle):
        mask_area("1:5", expected_total=6)


# --- mask_diff_table --------------------------------------------------------------


def test_identical_masks_zero_diff():
    pairs = [(area_track(f"i{k}", [100, 110, 90, 95]), model(f"i{k}", [100, 110, 90, 95])) for k in range(4)]
    rows = mask_diff_table(pairs, per=Category.HUMAN)
    assert len(rows) == 3  # frames 1..3; frame 0 is the conditioning frame
    for r in rows:
        assert r.avg_diff_px == 0.0 and r.std_px == 0.0 and r.count == 4


def test_single_pair_sign_convention():
    gt = area_track("a", [100, 100, 100, 100, 100, 100])
    pr = model("a", [100, 100, 100, 100, 100, 120])
    rows = mask_diff_table([(gt, pr)], per=Category.HUMAN)
    row5 = [r for r in rows if r.frame_index == 5][0]
    assert row5 == MaskDiffRow(5, Category.HUMAN, 20.0, 0.0, 1)


def test_frame_zero_excluded():
    pairs = [(area_track("a", [50, 60]), model("a", [999, 60]))]
    rows = mask_diff_table(pairs, per=Category.HUMAN)
    assert [r.frame_index for r in rows] == [1]


def test_swap_negates_avg_preserves_std():
    rng = np.random.default_rng(311)
    pairs = []
    for k in range(6):
        g = area_track(f"i{k}", rng.integers(50, 500, size=8).tolist())
        p = model(f"i{k}", rng.integers(50, 500, size=8).tolist())
        pairs.append((g, p))
    fwd = mask_diff_table(pairs, per=Category.HUMAN)
    rev = mask_diff_table([(p, g) for g, p in pairs], per=Category.HUMAN)
    for a, b in zip(fwd, rev):
        assert a.count == b.count
        if a.count:
            assert b.avg_diff_px == pytest.approx(-a.avg_diff_px, abs=1e-9)
            assert b.std_px == pytest.approx(a.std_px, abs=1e-9)


def test_avg_std_match_two_pass_oracle():
    rng = np.random.default_rng(313)
    pairs = []
    diffs_at_2 = []
    for k in range(40):
        g_areas = rng.integers(10, 2000, size=4).tolist()
        p_areas = rng.integers(10, 2000, size=4).tolist()
        pairs.append((area_track(f"i{k}", g_areas), model(f"i{k}", p_areas)))
        diffs_at_2.append(p_areas[2] - g_areas[2])
    rows = mask_diff_table(pairs, per=Category.HUMAN)
    row2 = [r for r in rows if r.frame_index == 2][0]
    mean = sum(diffs_at_2) / len(diffs_at_2)
    var = sum((d - mean) ** 2 for d in diffs_at_2) / len(diffs_at_2)
    assert row2.avg_diff_px == pytest.approx(mean, rel=1e-9)
    assert row2.std_px == pytest.approx(math.sqrt(var), rel=1e-9)
    assert row2.count == 40


def test_empty_cells_emit_count_zero():
    # absent on the prediction side after frame 1 leaves empty cells
    pairs = [(area_track("a", [100, 100, 100]), model("a", [100, 100, None]))]
    rows = mask_diff_table(pairs, per=Category.HUMAN)
    by_frame = {r.frame_index: r for r in rows}
    assert by_frame[1].count == 1
    assert by_frame[2].count == 0
    assert by_frame[2].avg_diff_px is None and by_frame[2].std_px is None


def test_rle_used_when_area_missing():
    rle = encode_rle(np.array([1] * 7 + [0] * 3))
    obs = (
        TrackObservation(0, True, mask_area=7, mask_rle=rle),
        TrackObservation(1, True, centroid=np.array([0.0, 0.0]), mask_area=None, mask_rle=rle),
    )
    gt = Track("c1", Source.ground_truth(), "a", Category.HUMAN, obs)
    pr = model("a", [7, 10])
    rows = mask_diff_table([(gt, pr)], per=Category.HUMAN)
    assert rows[0].avg_diff_px == 3.0


def test_category_split():
    pairs = [
        (area_track("h", [10, 10]), model("h", [10, 14])),
        (area_track("v", [10, 10], category=Category.VEHICLE), model("v", [10, 7], category=Category.VEHICLE)),
    ]
    rows = mask_diff_table(pairs)
    human = [r for r in rows if r.category == Category.HUMAN][0]
    vehicle = [r for r in rows if r.category == Category.VEHICLE][0]
    assert human.avg_diff_px == 4.0
    assert vehicle.avg_diff_px == -3.0


def test_gt_vs_gt_identically_zero():
    rng = np.random.default_rng(317)
    pairs = []
    for k in range(5):
        t = area_track(f"i{k}", rng.integers(10, 400, size=6).tolist())
        pairs.append((t, t))
    for r in mask_diff_table(pairs, per=Category.HUMAN):
        assert r.avg_diff_px == 0.0 and r.std_px == 0.0
