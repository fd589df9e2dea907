from __future__ import annotations

import numpy as np
import pytest
import scipy.linalg

from sca_eval.errors import DimensionMismatch, MalformedRecord
from sca_eval.frechet import FeatureSet, _sqrt_psd, frechet_distance, load_features, save_features


def oracle_frechet(a, b):
    """Reference via scipy's general matrix square root."""
    mu_a, mu_b = a.mean(axis=0), b.mean(axis=0)
    sa = np.cov(a, rowvar=False, ddof=1)
    sb = np.cov(b, rowvar=False, ddof=1)
    sa = np.atleast_2d(sa)
    sb = np.atleast_2d(sb)
    covmean = scipy.linalg.sqrtm(sa @ sb)
    if np.iscomplexobj(covmean):
        covmean = covmean.real
    diff = mu_a - mu_b
    return float(diff @ diff + np.trace(sa + sb - 2.0 * covmean))


def fset(arr, label="x"):
    return FeatureSet(label, np.asarray(arr, dtype=np.float64))


def test_identical_sets_zero():
    rng = np.random.default_rng(503)
    a = fset(rng.normal(size=(40, 8)))
    r = frechet_distance(a, a)
    assert abs(r.distance) < 1e-8
    assert r.mean_term == 0.0
    assert abs(r.trace_term) < 1e-8
    assert not r.degenerate


def test_closed_form_mean_shift():
    # sample stats are exact: {-1,0,1} has mean 0, sample variance 1
    a = fset([[-1.0], [0.0], [1.0]])
    b = fset([[0.0], [1.0], [2.0]])
    r = frechet_distance(a, b)
    assert r.distance == pytest.approx(1.0, abs=1e-8)
    assert r.mean_term == pytest.approx(1.0, abs=1e-12)
    assert r.trace_term == pytest.approx(0.0, abs=1e-8)


def test_closed_form_scale_change():
    # {-3,0,3}: mean 0, sample variance 9; (1-3)^2 = 4
    a = fset([[-1.0], [0.0], [1.0]])
    b = fset([[-3.0], [0.0], [3.0]])
    r = frechet_distance(a, b)
    assert r.distance == pytest.approx(4.0, abs=1e-8)
    assert r.mean_term == 0.0


def test_one_dim_closed_form_random():
    rng = np.random.default_rng(509)
    for _ in range(30):
        a = rng.normal(rng.uniform(-5, 5), rng.uniform(0.5, 3), size=(50, 1))
        b = rng.normal(rng.uniform(-5, 5), rng.uniform(0.5, 3), size=(60, 1))
        mu_a, mu_b = a.mean(), b.mean()
        sd_a, sd_b = a.std(ddof=1), b.std(ddof=1)
        expect = (mu_a - mu_b) ** 2 + (sd_a - sd_b) ** 2
        got = frechet_distance(fset(a), fset(b)).distance
        assert got == pytest.approx(expect, abs=1e-8)


def test_matches_scipy_oracle():
    rng = np.random.default_rng(521)
    for dim in (2, 5, 16):
        for _ in range(10):
            a = rng.normal(size=(dim * 4, dim)) @ rng.normal(size=(dim, dim))
            b = rng.normal(size=(dim * 5, dim)) + rng.uniform(-2, 2, size=dim)
            got = frechet_distance(fset(a), fset(b)).distance
            assert got == pytest.approx(oracle_frechet(a, b), abs=1e-6)


def test_symmetry():
    rng = np.random.default_rng(523)
    for _ in range(25):
        a = fset(rng.normal(size=(30, 16)))
        b = fset(rng.normal(size=(35, 16)) * rng.uniform(0.5, 2.0))
        d_ab = frechet_distance(a, b).distance
        d_ba = frechet_distance(b, a).distance
        assert abs(d_ab - d_ba) < 1e-8


def test_nonnegative():
    rng = np.random.default_rng(541)
    for _ in range(30):
        a = fset(rng.normal(size=(20, 6)))
        b = fset(rng.normal(size=(25, 6)))
        assert frechet_distance(a, b).distance >= -1e-8


def test_orthogonal_map_invariance():
    rng = np.random.default_rng(547)
    for _ in range(15):
        dim = 8
        a = rng.normal(size=(40, dim)) * rng.uniform(0.5, 2)
        b = rng.normal(size=(45, dim)) + 1.0
        q = np.linalg.qr(rng.normal(size=(dim, dim)))[0]
        shift = rng.normal(size=dim) * 10
        base = frechet_distance(fset(a), fset(b)).distance
        moved = frechet_distance(fset(a @ q.T + shift), fset(b @ q.T + shift)).distance
        assert moved == pytest.approx(base, rel=1e-6, abs=1e-9)


def test_distance_decomposes():
    rng = np.random.default_rng(557)
    a = fset(rng.normal(size=(30, 4)))
    b = fset(rng.normal(size=(30, 4)) + 2.0)
    r = frechet_distance(a, b)
    assert r.distance == pytest.approx(r.mean_term + r.trace_term, abs=1e-8)


def test_dimension_mismatch():
    a = fset(np.zeros((3, 2)) + [[0, 0], [1, 1], [2, 2]])
    b = fset([[-1.0, 0.0, 1.0], [1.0, 0.0, -1.0], [0.0, 1.0, 0.0]])
    with pytest.raises(DimensionMismatch):
        frechet_distance(a, b)


def test_too_few_vectors_rejected():
    with pytest.raises(ValueError):
        FeatureSet("tiny", np.zeros((1, 4)))


def test_sqrt_psd_flags_negative_eigenvalue():
    root, degen = _sqrt_psd(np.diag([1.0, -1e-6]))
    assert degen
    assert np.allclose(root, np.diag([1.0, 0.0]))
    root, degen = _sqrt_psd(np.diag([4.0, 9.0]))
    assert not degen
    assert np.allclose(root, np.diag([2.0, 3.0]))


def test_sqrt_psd_matches_scipy_on_psd():
    rng = np.random.default_rng(563)
    for _ in range(20):
        m = rng.normal(size=(6, 6))
        psd = m @ m.T
        root, degen = _sqrt_psd(psd)
        assert not degen
        assert np.allclose(root @ root, psd, atol=1e-9)


# --- feature files ---------------------------------------------------------------


def test_feature_file_round_trip(tmp_path):
    rng = np.random.default_rng(569)
    fs = fset(rng.normal(size=(7, 5)), label="inception_gt")
    p = tmp_path / "f.feat"
    save_features(p, fs)
    assert load_features(p) == fs


def test_feature_file_header_validation(tmp_path):
    p = tmp_path / "bad.feat"
    p.write_text("vectors x 2 1\n0.0 0.0\n")
    with pytest.raises(MalformedRecord):
        load_features(p)


def test_feature_file_count_mismatch(tmp_path):
    p = tmp_path / "short.feat"
    p.write_text("features x 2 3\n0.0 0.0\n1.0 1.0\n")
    with pytest.raises(MalformedRecord):
        load_features(p)


def test_feature_file_dim_mismatch(tmp_path):
    p = tmp_path / "dim.feat"
    p.write_text("features x 2 2\n0.0 0.0\n1.0 1.0 2.0\n")
    with pytest.raises(MalformedRecord):
        load_features(p)


def test_feature_file_non_numeric(tmp_path):
    p = tmp_path / "nan.feat"
    p.write_text("features x 2 2\n0.0 0.0\n1.0 oops\n")
    with pytest.raises(MalformedRecord):
        load_features(p)
