from __future__ import annotations

import math

import numpy as np
import pytest

from sca_eval.preproc import (
    CropPlan,
    apply_crop,
    bilinear_weights,
    lanczos_weights,
    plan_crop,
    preprocess_fid,
    preprocess_fvd,
    read_ppm,
    resample,
    write_ppm,
)

# --- independent scalar oracles -------------------------------------------------


def lanczos_kernel_scalar(t, a=3):
    t = abs(t)
    if t >= a:
        return 0.0
    if t == 0.0:
        return 1.0
    return a * math.sin(math.pi * t) * math.sin(math.pi * t / a) / (math.pi * t) ** 2


def oracle_resample_1d(row, n_out, method="lanczos"):
    """Direct per-pixel convolution with clamped sampling, scalar code."""
    n_in = len(row)
    scale = n_in / n_out
    out = []
    for i in range(n_out):
        c = (i + 0.5) * scale - 0.5
        if method == "lanczos":
            fs = max(scale, 1.0)
            support = 3 * fs
            lo = math.ceil(c - support)
            hi = math.floor(c + support)
            taps = [(j, lanczos_kernel_scalar((j - c) / fs)) for j in range(lo, hi + 1)]
        else:
            j0 = math.floor(c)
            t = c - j0
            taps = [(j0, 1.0 - t), (j0 + 1, t)]
        total = sum(w for _, w in taps)
        acc = 0.0
        for j, w in taps:
            acc += (w / total) * row[min(max(j, 0), n_in - 1)]
        out.append(acc)
    return np.array(out)


def oracle_resample_2d(img, out_h, out_w, method="lanczos"):
    tmp = np.stack([oracle_resample_1d(img[:, x], out_h, method) for x in range(img.shape[1])], axis=1)
    return np.stack([oracle_resample_1d(tmp[y, :], out_w, method) for y in range(out_h)], axis=0)


# --- crop plans -------------------------------------------------------------------


def test_same_size_is_noop_crop():
    p = plan_crop(448, 256)
    assert (p.crop_x, p.crop_y, p.crop_w, p.crop_h) == (0, 0, 448, 256)


def test_wide_source_crops_width():
    p = plan_crop(1600, 900)
    assert (p.crop_w, p.crop_h) == (1575, 900)
    assert (p.crop_x, p.crop_y) == (12, 0)


def test_square_source_crops_height():
    p = plan_crop(448, 448)
    assert (p.crop_w, p.crop_h) == (448, 256)
    assert (p.crop_x, p.crop_y) == (0, 96)


def test_exact_ratio_full_frame():
    p = plan_crop(896, 512)
    assert (p.crop_x, p.crop_y, p.crop_w, p.crop_h) == (0, 0, 896, 512)


def test_crop_plan_invariants_random_sweep():
    rng = np.random.default_rng(401)
    for _ in range(2000):
        sw = int(rng.integers(1, 3000))
        sh = int(rng.integers(1, 3000))
        p = plan_crop(sw, sh)
        assert 0 <= p.crop_x and p.crop_x + p.crop_w <= sw
        assert 0 <= p.crop_y and p.crop_y + p.crop_h <= sh
        assert p.crop_w >= 1 and p.crop_h >= 1
        # aspect within 1 px along the cropped axis
        assert abs(p.crop_w - p.crop_h * 448.0 / 256.0) <= 1.0 or abs(p.crop_h - p.crop_w * 256.0 / 448.0) <= 1.0
        # centered within 1 px
        assert abs(p.crop_x - (sw - p.crop_w) / 2.0) <= 1.0
        assert abs(p.crop_y - (sh - p.crop_h) / 2.0) <= 1.0


def test_degenerate_dims_rejected():
    with pytest.raises(ValueError):
        plan_crop(0, 100)
    with pytest.raises(ValueError):
        CropPlan(10, 10, 8, 0, 5, 10, 448, 256, "lanczos")  # window spills right edge


def test_apply_crop_slices():
    img = np.arange(100, dtype=np.float64).reshape(10, 10)
    p = plan_crop(10, 10, out_w=8, out_h=4)  # ratio 2 > 1: crop height to 5
    assert (p.crop_w, p.crop_h) == (10, 5)
    out = apply_crop(img, p)
    assert out.shape == (5, 10)
    assert out[0, 0] == img[p.crop_y, 0]


def test_apply_crop_dim_mismatch():
    with pytest.raises(ValueError):
        apply_crop(np.zeros((5, 5)), plan_crop(10, 10))


# --- resampling --------------------------------------------------------------------


def test_identity_resample_is_exact(backend):
    rng = np.random.default_rng(409)
    img = rng.uniform(0, 255, size=(12, 17, 3))
    out = resample(img, 12, 17, "lanczos")
    assert np.array_equal(out, img)


def test_constant_preserved(backend):
    img = np.full((30, 40, 3), 173.25)
    for method in ("lanczos", "bilinear"):
        out = resample(img, 13, 21, method)
        assert np.allclose(out, 173.25, atol=1e-9)


def test_lanczos_matches_scalar_oracle(backend):
    rng = np.random.default_rng(419)
    img = rng.uniform(0, 255, size=(20, 28))
    out = resample(img, 9, 13, "lanczos")
    expect = oracle_resample_2d(img, 9, 13, "lanczos")
    assert np.allclose(out, expect, atol=1e-6)


def test_lanczos_upscale_matches_oracle(backend):
    rng = np.random.default_rng(421)
    img = rng.uniform(0, 255, size=(8, 6))
    out = resample(img, 19, 17, "lanczos")
    assert np.allclose(out, oracle_resample_2d(img, 19, 17, "lanczos"), atol=1e-6)


def test_impulse_matches_oracle(backend):
    img = np.zeros((15, 15))
    img[7, 7] = 255.0
    out = resample(img, 7, 7, "lanczos")
    assert np.allclose(out, oracle_resample_2d(img, 7, 7, "lanczos"), atol=1e-6)


def test_bilinear_matches_scalar_oracle(backend):
    rng = np.random.default_rng(431)
    img = rng.uniform(0, 255, size=(16, 22))
    out = resample(img, 7, 9, "bilinear")
    assert np.allclose(out, oracle_resample_2d(img, 7, 9, "bilinear"), atol=1e-6)


def test_checkerboard_bilinear_oracle(backend):
    yy, xx = np.mgrid[0:32, 0:32]
    img = ((yy + xx) % 2 * 255).astype(np.float64)
    out = resample(img, 224 // 16, 224 // 16, "bilinear")
    assert np.allclose(out, oracle_resample_2d(img, 14, 14, "bilinear"), atol=1e-6)


def test_weight_rows_normalized():
    for n_in, n_out in [(900, 256), (256, 900), (448, 224), (7, 19)]:
        for fn in (lanczos_weights, bilinear_weights):
            idx, wts = fn(n_in, n_out)
            assert idx.shape == wts.shape
            assert np.allclose(wts.sum(axis=1), 1.0, atol=1e-12)
            assert idx.min() >= 0 and idx.max() < n_in


def test_unknown_method_rejected():
    with pytest.raises(ValueError):
        resample(np.zeros((4, 4)), 2, 2, "nearest")


# --- pipelines ----------------------------------------------------------------------


def test_fid_pipeline_shape_and_constancy(backend):
    img = np.full((900, 1600, 3), 42.0)
    out = preprocess_fid(img)
    assert out.shape == (256, 448, 3)
    assert np.allclose(out, 42.0, atol=1e-9)


def test_fid_idempotent_on_target_size():
    rng = np.random.default_rng(433)
    img = rng.uniform(0, 255, size=(256, 448, 3))
    out = preprocess_fid(img)
    assert np.array_equal(out, img)  # scale 1 resample is an exact identity


def test_fvd_constant_frames(backend):
    frames = [np.full((900, 1600, 3), 7.0) for _ in range(25)]
    outs = preprocess_fvd(frames)
    assert len(outs) == 25
    for o in outs:
        assert o.shape == (224, 224, 3)
        assert np.allclose(o, 7.0, atol=1e-9)


def test_fvd_composes_fid_then_bilinear(backend):
    rng = np.random.default_rng(439)
    frame = rng.uniform(0, 255, size=(90, 160, 3))
    via_pipeline = preprocess_fvd([frame])[0]
    manual = resample(preprocess_fid(frame), 224, 224, "bilinear")
    assert np.array_equal(via_pipeline, manual)


def test_fvd_rejects_mixed_dims():
    with pytest.raises(ValueError):
        preprocess_fvd([np.zeros((10, 20, 3)), np.zeros((11, 20, 3))])


def test_gray_input_stays_gray():
    img = np.full((64, 112), 9.0)
    assert preprocess_fid(img).shape == (256, 448)


# --- ppm fixtures ---------------------------------------------------------------------


def test_ppm_round_trip(tmp_path):
    rng = np.random.default_rng(443)
    img = rng.integers(0, 256, size=(6, 9, 3), dtype=np.uint8)
    p = tmp_path / "img.ppm"
    write_ppm(p, img)
    assert np.array_equal(read_ppm(p), img)


def test_ppm_comment_handling(tmp_path):
    p = tmp_path / "c.ppm"
    body = bytes([10, 20, 30, 40, 50, 60])
    p.write_bytes(b"P6\n# a comment\n2 1\n# another\n255\n" + body)
    img = read_ppm(p)
    assert img.shape == (1, 2, 3)
    assert img[0, 0].tolist() == [10, 20, 30]


def test_ppm_float_write_rounds_half_up(tmp_path):
    p = tmp_path / "f.ppm"
    write_ppm(p, np.full((1, 1, 3), 99.5))
    assert read_ppm(p)[0, 0, 0] == 100


def test_ppm_rejects_wrong_magic(tmp_path):
    p = tmp_path / "bad.ppm"
    p.write_bytes(b"P5\n1 1\n255\nxxx")
    with pytest.raises(ValueError):
        read_ppm(p)


def test_ppm_rejects_truncated(tmp_path):
    p = tmp_path / "short.ppm"
    p.write_bytes(b"P6\n2 2\n255\n" + bytes(5))
    with pytest.raises(ValueError):
        read_ppm(p)
