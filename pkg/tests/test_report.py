"""Report assembly, emission round trips, and composite scoring."""

from __future__ import annotations

import hashlib
import random

import pytest

from sca_eval.errors import MalformedRecord, MissingMetric
from sca_eval.report import (
    MetricReport,
    ReportEntry,
    WeightSpec,
    composite_score,
    emit,
    emit_csv,
    emit_json,
    file_digest,
    histogram_entry,
    load_report,
    parse_csv,
    parse_json,
    scalar_entry,
)

META = {"convention": "lower-is-better"}


def displacement_entry():
    # Table-1-shaped per-category displacement block
    return ReportEntry(
        "displacement_2.5s",
        ("category", "dx/w", "dy/h", "dd_px", "n"),
        (
            ("Human", 0.021, 0.012, 31.5, 412),
            ("Vehicle", 0.034, 0.015, 48.25, 901),
            ("All", 0.0298, 0.0141, 42.75, 1313),
        ),
        {"window_s": "2.5", "normalization": "dx by width; dy by height"},
    )


def small_report():
    return MetricReport(
        "demo-model",
        (
            scalar_entry("frechet_image", 12.5, META),
            displacement_entry(),
            histogram_entry("centroid_hist", [0.0, 10.0, 20.0], [5, 3, 2], {"tail": "overflow"}),
        ),
        {"gt.trk": "a" * 64, "pred.trk": "b" * 64},
    )


# ------------------------------------------------------------ construction


def test_entry_requires_metadata():
    with pytest.raises(ValueError):
        ReportEntry("m", ("value",), ((1.0,),), {})


def test_ragged_row_rejected():
    with pytest.raises(ValueError):
        ReportEntry("m", ("a", "b"), ((1.0,),), META)


def test_separator_in_string_rejected():
    with pytest.raises(ValueError):
        ReportEntry("m", ("name",), (("x,y",),), META)
    with pytest.raises(ValueError):
        ReportEntry("m", ("name",), (("two\nlines",),), META)


def test_numeric_looking_string_rejected():
    # "42" would re-read as an int and break the round trip
    for bad in ("42", "-3", "2.5", "1e5", "inf", "nan"):
        with pytest.raises(ValueError):
            ReportEntry("m", ("name",), ((bad,),), META)


def test_structural_prefix_rejected():
    with pytest.raises(ValueError):
        ReportEntry("m", ("name",), (("#meta",),), META)
    with pytest.raises(ValueError):
        ReportEntry("#m", ("name",), (), META)


def test_bool_and_nonfinite_cells_rejected():
    with pytest.raises(ValueError):
        ReportEntry("m", ("v",), ((True,),), META)
    with pytest.raises(ValueError):
        ReportEntry("m", ("v",), ((float("inf"),),), META)


def test_empty_string_cell_rejected():
    # absent values are None, never the empty string
    with pytest.raises(ValueError):
        ReportEntry("m", ("v",), (("",),), META)


def test_duplicate_metric_ids_rejected():
    e = scalar_entry("m", 1.0, META)
    with pytest.raises(ValueError):
        MetricReport("model", (e, e))


def test_provenance_digest_validated():
    with pytest.raises(ValueError):
        MetricReport("model", (), {"gt.trk": "nothex"})
    MetricReport("model", (), {"gt.trk": "0" * 64})


def test_histogram_entry_shape():
    e = histogram_entry("h", [0.0, 1.0], [4, 6], META)
    assert e.columns == ("edge", "count")
    assert e.rows == ((0.0, 4), (1.0, 6))
    with pytest.raises(ValueError):
        histogram_entry("h", [0.0], [1, 2], META)


def test_scalar_value_access():
    assert scalar_entry("m", 2.5, META).scalar_value() == 2.5
    with pytest.raises(ValueError):
        displacement_entry().scalar_value()


def test_entry_lookup_missing():
    report = small_report()
    assert report.entry("frechet_image").scalar_value() == 12.5
    with pytest.raises(MissingMetric):
        report.entry("nonexistent")


def test_file_digest_matches_hashlib(tmp_path):
    p = tmp_path / "blob.bin"
    p.write_bytes(b"digest me" * 1000)
    assert file_digest(str(p)) == hashlib.sha256(b"digest me" * 1000).hexdigest()


# ---------------------------------------------------------------- emission

GOLDEN_CSV = (
    "#report,demo-model\n"
    "#provenance,gt.trk," + "a" * 64 + "\n"
    "#provenance,pred.trk," + "b" * 64 + "\n"
    "#metric,frechet_image\n"
    "#meta,convention,lower-is-better\n"
    "value\n"
    "12.5\n"
    "#metric,displacement_2.5s\n"
    "#meta,normalization,dx by width; dy by height\n"
    "#meta,window_s,2.5\n"
    "category,dx/w,dy/h,dd_px,n\n"
    "Human,0.021,0.012,31.5,412\n"
    "Vehicle,0.034,0.015,48.25,901\n"
    "All,0.0298,0.0141,42.75,1313\n"
    "#metric,centroid_hist\n"
    "#meta,tail,overflow\n"
    "edge,count\n"
    "0.0,5\n"
    "10.0,3\n"
    "20.0,2\n"
)


def test_golden_emission():
    assert emit_csv(small_report()) == GOLDEN_CSV


def test_csv_round_trip_equality():
    report = small_report()
    assert parse_csv(emit_csv(report)) == report


def test_csv_reemit_byte_identical():
    text = emit_csv(small_report())
    assert emit_csv(parse_csv(text)) == text


def test_json_round_trip_and_reemit():
    report = small_report()
    text = emit_json(report)
    assert parse_json(text) == report
    assert emit_json(parse_json(text)) == text


def test_formats_agree():
    report = small_report()
    assert parse_csv(emit_csv(report)) == parse_json(emit_json(report))


def test_empty_report_is_header_only():
    report = MetricReport("bare-model", ())
    assert emit_csv(report) == "#report,bare-model\n"
    assert parse_csv("#report,bare-model\n") == report


def test_zero_row_table_round_trips():
    report = MetricReport("m", (ReportEntry("empty", ("a", "b"), (), META),))
    text = emit_csv(report)
    assert parse_csv(text) == report
    assert emit_csv(parse_csv(text)) == text


def test_none_cells_round_trip():
    entry = ReportEntry(
        "sparse",
        ("frame", "avg", "std"),
        ((0, None, None), (1, 2.5, 0.5)),
        {"empty-cells": "no samples"},
    )
    report = MetricReport("m", (entry,))
    back = parse_csv(emit_csv(report))
    assert back.entry("sparse").rows == ((0, None, None), (1, 2.5, 0.5))


def test_cell_types_preserved():
    report = small_report()
    back = parse_csv(emit_csv(report))
    row = back.entry("displacement_2.5s").rows[0]
    assert isinstance(row[0], str)
    assert isinstance(row[1], float)
    assert isinstance(row[4], int)


def test_emit_and_load_files(tmp_path):
    report = small_report()
    csv_path = emit(report, "csv", str(tmp_path / "r.csv"))
    json_path = emit(report, "json", str(tmp_path / "r.json"))
    assert load_report(csv_path) == report
    assert load_report(json_path) == report
    with pytest.raises(ValueError):
        emit(report, "xml", str(tmp_path / "r.xml"))


@pytest.mark.parametrize(
    "text",
    [
        "",
        "#metric,m\n",
        "#report,m",  # missing trailing newline
        "#report,m\n#provenance,only-name\n",
        "#report,m\n#metric,x\n#meta,k,v\n",  # no header row
        "#report,m\n#metric,x\n#meta,k,v\na,b\n1,2,3\n",  # arity
        "not a report\n",
    ],
)
def test_parse_rejects_malformed(text):
    with pytest.raises(MalformedRecord):
        parse_csv(text)


def test_parse_json_rejects_garbage():
    with pytest.raises(MalformedRecord):
        parse_json("[1, 2, 3]")
    with pytest.raises(MalformedRecord):
        parse_json("{not json")


# --------------------------------------------------------------- composite


def weighted_report(values):
    entries = tuple(scalar_entry(mid, v, META) for mid, v in values.items())
    return MetricReport("m", entries)


def test_single_weight_returns_normalized_value():
    report = weighted_report({"fid": 30.0})
    spec = WeightSpec({"fid": 1.0}, {"fid": (0.0, 100.0)})
    assert composite_score(report, spec) == 0.3


def test_two_metrics_equal_weights():
    # normalized values 0.2 and 0.4 at half weight each average to 0.3
    report = weighted_report({"a": 0.2, "b": 0.4})
    spec = WeightSpec({"a": 0.5, "b": 0.5}, {"a": (0.0, 1.0), "b": (0.0, 1.0)})
    assert composite_score(report, spec) == pytest.approx(0.3, abs=1e-12)


def test_doubling_weights_doubles_score():
    rng = random.Random(7)
    for _ in range(100):
        values = {f"m{i}": rng.uniform(0.0, 50.0) for i in range(5)}
        report = weighted_report(values)
        weights = {k: rng.uniform(0.1, 3.0) for k in values}
        norm = {k: (0.0, 50.0) for k in values}
        one = composite_score(report, WeightSpec(weights, norm))
        two = composite_score(report, WeightSpec({k: 2 * w for k, w in weights.items()}, norm))
        assert two == 2.0 * one


def test_normalization_clamps_to_unit_interval():
    spec = WeightSpec({"m": 2.0}, {"m": (10.0, 5.0)})
    assert composite_score(weighted_report({"m": 3.0}), spec) == 0.0
    assert composite_score(weighted_report({"m": 100.0}), spec) == 2.0
    assert composite_score(weighted_report({"m": 12.5}), spec) == 1.0


def test_score_monotone_in_each_raw_metric():
    rng = random.Random(21)
    spec = WeightSpec(
        {"a": 0.7, "b": 0.3},
        {"a": (0.0, 10.0), "b": (5.0, 20.0)},
    )
    for _ in range(200):
        a = rng.uniform(-5.0, 20.0)
        b = rng.uniform(-5.0, 40.0)
        bump = rng.uniform(0.0, 10.0)
        base = composite_score(weighted_report({"a": a, "b": b}), spec)
        more_a = composite_score(weighted_report({"a": a + bump, "b": b}), spec)
        more_b = composite_score(weighted_report({"a": a, "b": b + bump}), spec)
        assert more_a >= base
        assert more_b >= base


def test_missing_weighted_metric_raises():
    spec = WeightSpec({"fid": 1.0, "absent": 0.5}, {"fid": (0, 1), "absent": (0, 1)})
    with pytest.raises(MissingMetric):
        composite_score(weighted_report({"fid": 0.5}), spec)


def test_zero_weight_metric_may_be_absent():
    spec = WeightSpec({"fid": 1.0, "extra": 0.0}, {"fid": (0.0, 1.0)})
    assert composite_score(weighted_report({"fid": 0.25}), spec) == 0.25


def test_weight_spec_validation():
    with pytest.raises(ValueError):
        WeightSpec({"a": 0.0}, {})
    with pytest.raises(ValueError):
        WeightSpec({"a": -1.0, "b": 1.0}, {"a": (0, 1), "b": (0, 1)})
    with pytest.raises(ValueError):
        WeightSpec({"a": 1.0}, {})
    with pytest.raises(ValueError):
        WeightSpec({"a": 1.0}, {"a": (0.0, 0.0)})
    with pytest.raises(ValueError):
        WeightSpec({"a": 1.0}, {"a": (0.0, -2.0)})


def test_composite_is_order_independent():
    report = weighted_report({"x": 1.0, "y": 2.0, "z": 3.0})
    norm = {"x": (0.0, 4.0), "y": (0.0, 4.0), "z": (0.0, 4.0)}
    s1 = composite_score(report, WeightSpec({"x": 0.1, "y": 0.2, "z": 0.3}, norm))
    s2 = composite_score(report, WeightSpec({"z": 0.3, "x": 0.1, "y": 0.2}, norm))
    assert s1 == s2
