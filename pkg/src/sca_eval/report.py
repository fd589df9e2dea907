"""Metric report assembly and emission.

A report is an ordered collection of small named tables plus provenance
digests of every input file.  Tables round-trip losslessly through two
emissions: a line-oriented CSV dialect whose structural lines start with
'#', and canonical JSON.  A weighted composite score collapses scalar
entries into one number for model ranking.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Tuple, Union

from .errors import MalformedRecord, MissingMetric

Cell = Union[None, int, float, str]

_INT_RE = re.compile(r"-?\d+")
_HEX_DIGEST_RE = re.compile(r"[0-9a-f]{64}")


def _parse_cell(text: str) -> Cell:
    """Inverse of _cell_to_text: empty is None, then int, float, string."""
    if text == "":
        return None
    if _INT_RE.fullmatch(text):
        return int(text)
    try:
        return float(text)
    except ValueError:
        return text


def _cell_to_text(value: Cell) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        raise ValueError("boolean cells are not representable")
    if isinstance(value, int):
        return str(int(value))
    if isinstance(value, float):
        # float() first: float subclasses may repr differently
        return repr(float(value))
    return value


def _check_name(text: str, what: str) -> None:
    """Names and string cells share one charset: no separators, no
    structural prefix, and nothing the cell parser would retype."""
    if not isinstance(text, str) or not text:
        raise ValueError(f"{what} must be a non-empty string, got {text!r}")
    if "," in text or "\n" in text or "\r" in text:
        raise ValueError(f"{what} {text!r} contains a separator character")
    if text.startswith("#"):
        raise ValueError(f"{what} {text!r} collides with structural lines")


def _check_cell(value: Cell, where: str) -> None:
    if value is None:
        return
    if isinstance(value, bool):
        raise ValueError(f"{where}: boolean cells are not representable")
    if isinstance(value, int):
        return
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"{where}: non-finite value {value!r}")
        return
    if isinstance(value, str):
        _check_name(value, where)
        if _parse_cell(value) != value:
            raise ValueError(f"{where}: string {value!r} would re-read as a number")
        return
    raise ValueError(f"{where}: unsupported cell type {type(value).__name__}")


@dataclass(frozen=True)
class ReportEntry:
    """One named table: columns, typed rows, and convention metadata.

    Metadata is mandatory so a table can never travel without stating the
    conventions (sign, normalization axis, window, ...) that produced it.
    """

    metric_id: str
    columns: tuple
    rows: tuple
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        _check_name(self.metric_id, "metric_id")
        object.__setattr__(self, "columns", tuple(self.columns))
        if not self.columns:
            raise ValueError(f"entry {self.metric_id}: needs at least one column")
        for c in self.columns:
            _check_name(c, f"entry {self.metric_id} column")
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        for i, row in enumerate(self.rows):
            if len(row) != len(self.columns):
                raise ValueError(
                    f"entry {self.metric_id} row {i}: {len(row)} cells for {len(self.columns)} columns"
                )
            for v in row:
                _check_cell(v, f"entry {self.metric_id} row {i}")
        object.__setattr__(self, "metadata", dict(self.metadata))
        if not self.metadata:
            raise ValueError(f"entry {self.metric_id}: convention metadata is mandatory")
        for k, v in self.metadata.items():
            _check_name(k, f"entry {self.metric_id} metadata key")
            if not isinstance(v, str) or "," in v or "\n" in v or "\r" in v or v.startswith("#"):
                raise ValueError(f"entry {self.metric_id} metadata value {v!r} is not emittable")

    def scalar_value(self) -> float:
        if len(self.columns) != 1 or len(self.rows) != 1:
            raise ValueError(f"entry {self.metric_id} is not a scalar table")
        v = self.rows[0][0]
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ValueError(f"entry {self.metric_id} holds a non-numeric value {v!r}")
        return float(v)


def scalar_entry(metric_id: str, value: Union[int, float], metadata: Mapping[str, str]) -> ReportEntry:
    return ReportEntry(metric_id, ("value",), ((value,),), metadata)


def histogram_entry(
    metric_id: str,
    edges: Sequence[float],
    counts: Sequence[int],
    metadata: Mapping[str, str],
) -> ReportEntry:
    """Plot-ready (edge, count) rows; edge i is the lower bound of bin i."""
    if len(edges) != len(counts):
        raise ValueError(f"{len(edges)} edges for {len(counts)} counts")
    rows = tuple((float(e), int(c)) for e, c in zip(edges, counts))
    return ReportEntry(metric_id, ("edge", "count"), rows, metadata)


@dataclass(frozen=True)
class MetricReport:
    """All tables for one model plus digests of the files they came from."""

    model_name: str
    entries: tuple
    provenance: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        _check_name(self.model_name, "model_name")
        object.__setattr__(self, "entries", tuple(self.entries))
        seen = set()
        for e in self.entries:
            if not isinstance(e, ReportEntry):
                raise ValueError(f"entries must be ReportEntry, got {type(e).__name__}")
            if e.metric_id in seen:
                raise ValueError(f"duplicate metric_id {e.metric_id!r}")
            seen.add(e.metric_id)
        object.__setattr__(self, "provenance", dict(self.provenance))
        for name, digest in self.provenance.items():
            _check_name(name, "provenance name")
            if not isinstance(digest, str) or not _HEX_DIGEST_RE.fullmatch(digest):
                raise ValueError(f"provenance digest for {name!r} is not a sha256 hex digest")

    def entry(self, metric_id: str) -> ReportEntry:
        for e in self.entries:
            if e.metric_id == metric_id:
                return e
        raise MissingMetric(metric_id)


def file_digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# ------------------------------------------------------------------ weights


@dataclass(frozen=True)
class WeightSpec:
    """Per-metric weights and the (offset, scale) that maps each raw value
    onto [0, 1] with lower still meaning better."""

    weights: Mapping[str, float]
    normalization: Mapping[str, Tuple[float, float]]

    def __post_init__(self):
        object.__setattr__(self, "weights", dict(self.weights))
        object.__setattr__(
            self, "normalization", {k: (float(o), float(s)) for k, (o, s) in self.normalization.items()}
        )
        if not any(w > 0 for w in self.weights.values()):
            raise ValueError("at least one weight must be positive")
        for mid, w in self.weights.items():
            if w < 0:
                raise ValueError(f"weight for {mid!r} is negative")
            if w > 0 and mid not in self.normalization:
                raise ValueError(f"no normalization given for weighted metric {mid!r}")
        for mid, (offset, scale) in self.normalization.items():
            if not (math.isfinite(offset) and math.isfinite(scale)):
                raise ValueError(f"normalization for {mid!r} is not finite")
            if scale <= 0:
                raise ValueError(f"scale for {mid!r} must be positive")


def composite_score(report: MetricReport, spec: WeightSpec) -> float:
    """Weighted sum of normalized scalar metrics, lower is better.

    Each raw value maps through ((raw - offset) / scale) clamped to [0, 1];
    metrics are folded in sorted id order so the float sum is reproducible.
    """
    total = 0.0
    for metric_id in sorted(spec.weights):
        w = spec.weights[metric_id]
        if w == 0:
            continue
        raw = report.entry(metric_id).scalar_value()
        offset, scale = spec.normalization[metric_id]
        x = (raw - offset) / scale
        total += w * min(1.0, max(0.0, x))
    return total


# ----------------------------------------------------------------- CSV form


def emit_csv(report: MetricReport) -> str:
    """Canonical CSV: '#' structural lines, then header + data per table."""
    out = [f"#report,{report.model_name}"]
    for name in sorted(report.provenance):
        out.append(f"#provenance,{name},{report.provenance[name]}")
    for e in report.entries:
        out.append(f"#metric,{e.metric_id}")
        for k in sorted(e.metadata):
            out.append(f"#meta,{k},{e.metadata[k]}")
        out.append(",".join(e.columns))
        for row in e.rows:
            out.append(",".join(_cell_to_text(v) for v in row))
    return "\n".join(out) + "\n"


def parse_csv(text: str) -> MetricReport:
    if not text.endswith("\n"):
        raise MalformedRecord(text[-40:], "emission must end with a newline")
    lines = text.split("\n")[:-1]
    if not lines or not lines[0].startswith("#report,"):
        raise MalformedRecord(lines[0] if lines else "", "first line must declare the report")
    model_name = lines[0][len("#report,") :]
    provenance = {}
    i = 1
    while i < len(lines) and lines[i].startswith("#provenance,"):
        parts = lines[i].split(",")
        if len(parts) != 3:
            raise MalformedRecord(lines[i], "provenance line needs name and digest")
        provenance[parts[1]] = parts[2]
        i += 1
    entries = []
    while i < len(lines):
        if not lines[i].startswith("#metric,"):
            raise MalformedRecord(lines[i], "expected a metric declaration")
        metric_id = lines[i][len("#metric,") :]
        i += 1
        metadata = {}
        while i < len(lines) and lines[i].startswith("#meta,"):
            parts = lines[i].split(",")
            if len(parts) != 3:
                raise MalformedRecord(lines[i], "meta line needs key and value")
            metadata[parts[1]] = parts[2]
            i += 1
        if i >= len(lines) or lines[i].startswith("#"):
            raise MalformedRecord(metric_id, "metric block is missing its header row")
        columns = tuple(lines[i].split(","))
        i += 1
        rows = []
        while i < len(lines) and not lines[i].startswith("#"):
            cells = lines[i].split(",")
            if len(cells) != len(columns):
                raise MalformedRecord(lines[i], f"{len(cells)} cells for {len(columns)} columns")
            rows.append(tuple(_parse_cell(c) for c in cells))
            i += 1
        entries.append(ReportEntry(metric_id, columns, tuple(rows), metadata))
    return MetricReport(model_name, tuple(entries), provenance)


# ---------------------------------------------------------------- JSON form


def emit_json(report: MetricReport) -> str:
    obj = {
        "model_name": report.model_name,
        "provenance": dict(report.provenance),
        "entries": [
            {
                "metric_id": e.metric_id,
                "columns": list(e.columns),
                "metadata": dict(e.metadata),
                "rows": [list(r) for r in e.rows],
            }
            for e in report.entries
        ],
    }
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def parse_json(text: str) -> MetricReport:
    try:
        obj = json.loads(text)
        entries = tuple(
            ReportEntry(
                e["metric_id"],
                tuple(e["columns"]),
                tuple(tuple(r) for r in e["rows"]),
                e["metadata"],
            )
            for e in obj["entries"]
        )
        return MetricReport(obj["model_name"], entries, obj["provenance"])
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise MalformedRecord(text[:60], f"not a report: {exc}")


# --------------------------------------------------------------------- file


def emit(report: MetricReport, fmt: str, path: str) -> str:
    if fmt == "csv":
        payload = emit_csv(report)
    elif fmt == "json":
        payload = emit_json(report)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(payload)
    return path


def load_report(path: str, fmt: Optional[str] = None) -> MetricReport:
    if fmt is None:
        fmt = "json" if str(path).endswith(".json") else "csv"
    with open(path, "r", encoding="utf-8", newline="") as fh:
        text = fh.read()
    return parse_json(text) if fmt == "json" else parse_csv(text)
