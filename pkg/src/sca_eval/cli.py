"""Command-line front end for every pipeline stage.

Exit codes: 0 success, 1 validation or bad-input error, 2 I/O or transport
failure.  All output formatting is deterministic: identical arguments on
identical inputs produce byte-identical files and stdout, regardless of
the --jobs worker count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

from .data import Category, Source, all_absent_track, load_manifest, load_tracks, pair_tracks
from .errors import MalformedRecord, ScaEvalError, TransportError
from .frechet import frechet_distance, load_features
from .geometry import project_frame
from .mask_metrics import mask_diff_table
from .preproc import preprocess_fid, preprocess_fvd, read_ppm, write_ppm
from .report import (
    MetricReport,
    ReportEntry,
    WeightSpec,
    composite_score,
    emit,
    file_digest,
    histogram_entry,
    load_report,
)
from .review.judge import JudgeEndpoint, JudgePromptSpec, run_ai_judge
from .review.store import VerdictStore
from .review.tasks import (
    MODE_2AFC,
    MODE_COMPLIANCE,
    create_review_batch,
    tasks_from_json,
    tasks_to_json,
)
from .track_metrics import (
    ALL_CATEGORIES,
    centroid_distances,
    displacement_stats,
    duration_stats,
    presence_curve,
)

DEFAULT_WINDOW_S = 2.5
DEFAULT_TOLERANCE = 0
_MODE_TOKENS = {"2afc": MODE_2AFC, "compliance": MODE_COMPLIANCE}
_CATEGORY_CHOICES = (Category.HUMAN, Category.VEHICLE, Category.ANIMAL, ALL_CATEGORIES)


@dataclass(frozen=True)
class RunConfig:
    """Shared knobs every subcommand reads, with protocol defaults baked in."""

    subcommand: str
    inputs: tuple
    window_seconds: float = DEFAULT_WINDOW_S
    tolerance_frames: int = DEFAULT_TOLERANCE
    frame: Optional[int] = None  # None means the final frame of the clip
    out: Optional[str] = None
    seed: int = 0
    jobs: int = 1

    @staticmethod
    def from_args(ns: argparse.Namespace) -> "RunConfig":
        return RunConfig(
            subcommand=ns.command,
            inputs=tuple(getattr(ns, "inputs", ())),
            window_seconds=getattr(ns, "window", DEFAULT_WINDOW_S),
            tolerance_frames=getattr(ns, "tolerance", DEFAULT_TOLERANCE),
            frame=getattr(ns, "frame", None),
            out=getattr(ns, "out", None),
            seed=getattr(ns, "seed", 0),
            jobs=getattr(ns, "jobs", 1),
        )


class _Parser(argparse.ArgumentParser):
    # usage problems are validation errors: exit 1, not argparse's default 2
    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _pmap(fn, items, jobs: int) -> list:
    """Order-preserving map, optionally fanned out over worker threads."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _opt(value) -> str:
    return "-" if value is None else repr(float(value))


def _write_text(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _load_pairs(gt_path: str, pred_path: str) -> list:
    """Pair tracks by (clip, instance); hallucinated predictions pair
    against an all-absent truth track so they still count."""
    gt = load_tracks(gt_path)
    pred = load_tracks(pred_path)
    pairs, unmatched = pair_tracks(gt, pred)
    for p in unmatched:
        pairs.append((all_absent_track(p, Source.ground_truth()), p))
    return pairs


def _clip_len(pairs) -> int:
    return max((gt.clip_length for gt, _ in pairs), default=0)


def _emit_single_entry(cfg: RunConfig, ns, entry: ReportEntry, inputs: dict) -> None:
    if cfg.out is None:
        return
    provenance = {k: file_digest(v) for k, v in inputs.items()}
    rep = MetricReport(ns.model, (entry,), provenance)
    emit(rep, "csv", cfg.out)


# ------------------------------------------------------------- subcommands


def cmd_project(cfg: RunConfig, ns) -> int:
    manifest = load_manifest(ns.manifest, fmt=ns.fmt, scene_id=ns.scene_id)
    clip = (
        None
        if ns.no_clip
        else (float(manifest.image_width), float(manifest.image_height))
    )

    def one_frame(frame):
        boxes = project_frame(frame, clip_to=clip)
        rows = []
        for ann in frame.annotations:
            box = boxes.get(ann.instance_id)
            if box is None:
                continue
            cx, cy = box.centroid
            rows.append(
                ",".join(
                    [
                        str(frame.frame_index),
                        ann.instance_id,
                        ann.category,
                        repr(float(box.x_min)),
                        repr(float(box.y_min)),
                        repr(float(box.x_max)),
                        repr(float(box.y_max)),
                        repr(float(cx)),
                        repr(float(cy)),
                        str(int(box.fully_in_front)),
                    ]
                )
            )
        return rows

    per_frame = _pmap(one_frame, manifest.frames, cfg.jobs)
    lines = ["frame,instance,category,x_min,y_min,x_max,y_max,cx,cy,fully_in_front"]
    for rows in per_frame:
        lines.extend(rows)
    _write_text(cfg.out, "\n".join(lines) + "\n")
    return 0


def cmd_dyn_stats(cfg: RunConfig, ns) -> int:
    manifest = load_manifest(ns.manifest, fmt=ns.fmt, scene_id=ns.scene_id)
    categories = ns.per or list(_CATEGORY_CHOICES)
    rows = []
    for cat in categories:
        s = displacement_stats(manifest, cfg.window_seconds, per=cat)
        print(
            f"{s.category} dx/w={_opt(s.mean_dx_over_w)} dy/h={_opt(s.mean_dy_over_h)} "
            f"dd_px={_opt(s.mean_dd_px)} n={s.count}"
        )
        rows.append((s.category, s.mean_dx_over_w, s.mean_dy_over_h, s.mean_dd_px, s.count))
    entry = ReportEntry(
        f"displacement_{cfg.window_seconds!r}s",
        ("category", "dx/w", "dy/h", "dd_px", "n"),
        tuple(rows),
        {
            "window_s": repr(cfg.window_seconds),
            "normalization": "dx by image width; dy by image height; dd raw pixels",
        },
    )
    _emit_single_entry(cfg, ns, entry, {"manifest": ns.manifest})
    return 0


def cmd_duration(cfg: RunConfig, ns) -> int:
    pairs = _load_pairs(ns.gt, ns.pred)
    s = duration_stats(pairs, tolerance=cfg.tolerance_frames)
    print(
        f"M={s.match_pct:.1f} FP={s.fp_pct:.1f} FN={s.fn_pct:.1f} "
        f"P={s.precision:.1f} R={s.recall:.1f}"
    )
    entry = ReportEntry(
        "duration",
        ("m_pct", "fp_pct", "fn_pct", "precision", "recall", "n"),
        ((s.match_pct, s.fp_pct, s.fn_pct, s.precision, s.recall, s.n_instances),),
        {"tolerance_frames": str(cfg.tolerance_frames), "basis": "first presence run"},
    )
    _emit_single_entry(cfg, ns, entry, {"gt": ns.gt, "pred": ns.pred})
    return 0


def cmd_presence(cfg: RunConfig, ns) -> int:
    pairs = _load_pairs(ns.gt, ns.pred)
    curve = presence_curve(pairs, _clip_len(pairs))
    for k, acc in enumerate(curve.accuracy):
        print(f"frame={k} acc={_opt(acc)}")
    entry = ReportEntry(
        "presence",
        ("frame", "accuracy_pct"),
        tuple((k, acc) for k, acc in enumerate(curve.accuracy)),
        {"empty-cells": "no truth-present pair at that frame"},
    )
    _emit_single_entry(cfg, ns, entry, {"gt": ns.gt, "pred": ns.pred})
    return 0


def cmd_centroid(cfg: RunConfig, ns) -> int:
    pairs = _load_pairs(ns.gt, ns.pred)
    frame = cfg.frame if cfg.frame is not None else _clip_len(pairs) - 1
    s = centroid_distances(
        pairs, frame, hist_bins=ns.bins, outlier_threshold=ns.outlier_threshold
    )
    print(
        f"frame={s.frame_index} n={len(s.distances)} mean={s.mean!r} "
        f"std={s.std!r} outliers={s.outliers}"
    )
    entry = histogram_entry(
        f"centroid_hist_frame{s.frame_index}",
        [float(e) for e in s.bin_edges],
        [int(c) for c in s.bin_counts],
        {
            "frame": str(s.frame_index),
            "tail": "final bin counts beyond the 99.5th percentile",
            "outlier_threshold_px": repr(s.outlier_threshold),
        },
    )
    _emit_single_entry(cfg, ns, entry, {"gt": ns.gt, "pred": ns.pred})
    return 0


def cmd_mask_diff(cfg: RunConfig, ns) -> int:
    pairs = _load_pairs(ns.gt, ns.pred)
    cats = tuple(ns.categories) if ns.categories else (Category.HUMAN, Category.VEHICLE)
    rows = mask_diff_table(pairs, categories=cats)
    for r in rows:
        print(
            f"frame={r.frame_index} cat={r.category} avg={_opt(r.avg_diff_px)} "
            f"std={_opt(r.std_px)} n={r.count}"
        )
    entry = ReportEntry(
        "mask_diff",
        ("frame", "category", "avg_diff_px", "std_px", "n"),
        tuple((r.frame_index, r.category, r.avg_diff_px, r.std_px, r.count) for r in rows),
        {"sign": "prediction minus truth", "frame0": "conditioning frame excluded"},
    )
    _emit_single_entry(cfg, ns, entry, {"gt": ns.gt, "pred": ns.pred})
    return 0


def cmd_preprocess(cfg: RunConfig, ns) -> int:
    paths = list(cfg.inputs)
    if ns.out is not None and len(paths) != 1:
        raise ValueError("--out takes exactly one input; use --out-dir for several")
    if ns.out is None and ns.out_dir is None:
        raise ValueError("one of --out or --out-dir is required")

    if ns.target == "fvd":
        # one clip: frames resample together so dims are checked jointly
        frames = [read_ppm(p) for p in paths]
        processed = preprocess_fvd(frames)
    else:
        processed = _pmap(lambda p: preprocess_fid(read_ppm(p)), paths, cfg.jobs)

    if ns.out is not None:
        write_ppm(ns.out, processed[0])
    else:
        os.makedirs(ns.out_dir, exist_ok=True)
        dests = [os.path.join(ns.out_dir, os.path.basename(p)) for p in paths]
        _pmap(lambda pair: write_ppm(pair[0], pair[1]), list(zip(dests, processed)), cfg.jobs)
    return 0


def cmd_frechet(cfg: RunConfig, ns) -> int:
    a = load_features(cfg.inputs[0])
    b = load_features(cfg.inputs[1])
    res = frechet_distance(a, b)
    print(repr(round(res.distance, 8)))
    if res.degenerate:
        print("warning: covariance needed eigenvalue clamping", file=sys.stderr)
    return 0


def cmd_review_batch(cfg: RunConfig, ns) -> int:
    with open(ns.pairs, "r", encoding="utf-8") as fh:
        lines = [ln.split() for ln in fh.read().splitlines() if ln.strip()]
    mode = _MODE_TOKENS[ns.mode]
    if mode == MODE_2AFC:
        bad = [ln for ln in lines if len(ln) != 2]
        if bad:
            raise MalformedRecord(" ".join(bad[0]), "preference pairs need two clips per line")
        items = [(a, b) for a, b in lines]
    else:
        bad = [ln for ln in lines if len(ln) != 1]
        if bad:
            raise MalformedRecord(" ".join(bad[0]), "compliance lines carry one clip")
        items = [ln[0] for ln in lines]
    tasks = create_review_batch(items, mode, shuffle_seed=cfg.seed, rule_context=ns.rule)
    _write_text(cfg.out, tasks_to_json(tasks))
    return 0


def cmd_serve(cfg: RunConfig, ns) -> int:
    from .review.service import build_app

    with open(ns.tasks, "r", encoding="utf-8") as fh:
        tasks = tasks_from_json(fh.read())
    clip_models = None
    model_pair = None
    if ns.clip_models is not None:
        with open(ns.clip_models, "r", encoding="utf-8") as fh:
            clip_models = json.load(fh)
        if ns.models is None:
            raise ValueError("--models A,B is required together with --clip-models")
        names = ns.models.split(",")
        if len(names) != 2:
            raise ValueError("--models takes exactly two comma-separated names")
        model_pair = (names[0], names[1])
    store = VerdictStore(ns.log, tasks)
    app = build_app(store, ns.media, clip_models, model_pair)

    import uvicorn

    uvicorn.run(app, host=ns.host, port=ns.port, log_level="warning")
    return 0


def cmd_judge(cfg: RunConfig, ns) -> int:
    with open(ns.tasks, "r", encoding="utf-8") as fh:
        tasks = tasks_from_json(fh.read())
    if ns.instructions is not None:
        with open(ns.instructions, "r", encoding="utf-8") as fh:
            instruction_text = fh.read().strip()
    else:
        instruction_text = (
            "Compare the two clips and decide which one better preserves every "
            "pedestrian, vehicle, and animal from start to finish."
        )
    prompt = JudgePromptSpec(ns.template, instruction_text, frame_step=ns.frame_step)
    endpoint = JudgeEndpoint(ns.endpoint, ns.judge_model, timeout_s=ns.timeout)
    verdicts = run_ai_judge(tasks, prompt, endpoint, ns.media, retries=ns.retries)
    with VerdictStore(ns.log, tasks) as store:
        for v in verdicts:
            store.append(v)
    abstained = sum(1 for v in verdicts if v.choice == "Abstain")
    print(f"judged={len(verdicts)} abstained={abstained}")
    return 0


def cmd_score(cfg: RunConfig, ns) -> int:
    rep = load_report(ns.report)
    with open(ns.weights, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    try:
        spec = WeightSpec(
            obj["weights"],
            {k: (v[0], v[1]) for k, v in obj["normalization"].items()},
        )
    except (KeyError, TypeError) as exc:
        raise MalformedRecord(ns.weights, f"weight spec needs weights and normalization: {exc}")
    print(repr(round(composite_score(rep, spec), 8)))
    return 0


def cmd_report(cfg: RunConfig, ns) -> int:
    pairs = _load_pairs(ns.gt, ns.pred)
    clip_len = _clip_len(pairs)
    inputs = {"gt": ns.gt, "pred": ns.pred}

    entries = []
    s = duration_stats(pairs, tolerance=cfg.tolerance_frames)
    entries.append(
        ReportEntry(
            "duration",
            ("m_pct", "fp_pct", "fn_pct", "precision", "recall", "n"),
            ((s.match_pct, s.fp_pct, s.fn_pct, s.precision, s.recall, s.n_instances),),
            {"tolerance_frames": str(cfg.tolerance_frames), "basis": "first presence run"},
        )
    )
    curve = presence_curve(pairs, clip_len)
    entries.append(
        ReportEntry(
            "presence",
            ("frame", "accuracy_pct"),
            tuple((k, acc) for k, acc in enumerate(curve.accuracy)),
            {"empty-cells": "no truth-present pair at that frame"},
        )
    )
    frame = cfg.frame if cfg.frame is not None else clip_len - 1
    try:
        c = centroid_distances(pairs, frame)
        entries.append(
            ReportEntry(
                f"centroid_frame{c.frame_index}",
                ("n", "mean_px", "std_px", "outliers"),
                ((len(c.distances), c.mean, c.std, c.outliers),),
                {"outlier_threshold_px": repr(c.outlier_threshold)},
            )
        )
        entries.append(
            histogram_entry(
                f"centroid_hist_frame{c.frame_index}",
                [float(e) for e in c.bin_edges],
                [int(x) for x in c.bin_counts],
                {"tail": "final bin counts beyond the 99.5th percentile"},
            )
        )
    except ScaEvalError:
        pass  # no co-present pair at the target frame: omit those tables
    rows = mask_diff_table(pairs)
    entries.append(
        ReportEntry(
            "mask_diff",
            ("frame", "category", "avg_diff_px", "std_px", "n"),
            tuple((r.frame_index, r.category, r.avg_diff_px, r.std_px, r.count) for r in rows),
            {"sign": "prediction minus truth", "frame0": "conditioning frame excluded"},
        )
    )
    if ns.manifest is not None:
        manifest = load_manifest(ns.manifest, fmt=ns.fmt, scene_id=ns.scene_id)
        inputs["manifest"] = ns.manifest
        disp_rows = []
        for cat in _CATEGORY_CHOICES:
            d = displacement_stats(manifest, cfg.window_seconds, per=cat)
            disp_rows.append((d.category, d.mean_dx_over_w, d.mean_dy_over_h, d.mean_dd_px, d.count))
        entries.append(
            ReportEntry(
                f"displacement_{cfg.window_seconds!r}s",
                ("category", "dx/w", "dy/h", "dd_px", "n"),
                tuple(disp_rows),
                {
                    "window_s": repr(cfg.window_seconds),
                    "normalization": "dx by image width; dy by image height; dd raw pixels",
                },
            )
        )
    provenance = {k: file_digest(v) for k, v in inputs.items()}
    rep = MetricReport(ns.model, tuple(entries), provenance)
    emit(rep, ns.format, cfg.out)
    return 0


# ------------------------------------------------------------------ parser


def _add_manifest_args(p):
    p.add_argument("--manifest", required=True, help="scene manifest file")
    p.add_argument("--fmt", choices=("native", "nuscenes"), default="native")
    p.add_argument("--scene-id", default=None)


def _add_pair_args(p):
    p.add_argument("--gt", required=True, help="ground-truth track file")
    p.add_argument("--pred", required=True, help="predicted track file")


def _add_out_report_args(p):
    p.add_argument("--out", default=None, help="also write the result as a report table")
    p.add_argument("--model", default="model", help="model name recorded in --out tables")


def build_parser() -> _Parser:
    parser = _Parser(prog="sca-eval", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("project", help="project 3-D boxes to 2-D rows")
    _add_manifest_args(p)
    p.add_argument("--out", default=None, help="output CSV (default stdout)")
    p.add_argument("--no-clip", action="store_true", help="keep boxes unclamped")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("dyn-stats", help="projected-centroid displacement over a window")
    _add_manifest_args(p)
    p.add_argument("--window", type=float, default=DEFAULT_WINDOW_S)
    p.add_argument("--per", action="append", choices=_CATEGORY_CHOICES, default=None)
    _add_out_report_args(p)
    p.set_defaults(func=cmd_dyn_stats)

    p = sub.add_parser("duration", help="presence-run duration agreement")
    _add_pair_args(p)
    p.add_argument("--tolerance", type=int, default=DEFAULT_TOLERANCE)
    _add_out_report_args(p)
    p.set_defaults(func=cmd_duration)

    p = sub.add_parser("presence", help="per-frame retention curve")
    _add_pair_args(p)
    _add_out_report_args(p)
    p.set_defaults(func=cmd_presence)

    p = sub.add_parser("centroid", help="centroid distance distribution at one frame")
    _add_pair_args(p)
    p.add_argument("--frame", type=int, default=None, help="frame index (default: last)")
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--outlier-threshold", type=float, default=100.0)
    _add_out_report_args(p)
    p.set_defaults(func=cmd_centroid)

    p = sub.add_parser("mask-diff", help="signed mask-area difference per frame")
    _add_pair_args(p)
    p.add_argument(
        "--categories",
        action="append",
        choices=(Category.HUMAN, Category.VEHICLE, Category.ANIMAL, Category.OTHER),
        default=None,
    )
    _add_out_report_args(p)
    p.set_defaults(func=cmd_mask_diff)

    p = sub.add_parser("preprocess", help="crop and resample frames")
    p.add_argument("inputs", nargs="+", help="input PPM images")
    p.add_argument("--target", choices=("fid", "fvd"), default="fid")
    p.add_argument("--out", default=None, help="output path for a single input")
    p.add_argument("--out-dir", default=None, help="output directory for several inputs")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("frechet", help="distribution distance between feature sets")
    p.add_argument("inputs", nargs=2, help="two feature files")
    p.set_defaults(func=cmd_frechet)

    p = sub.add_parser("review-batch", help="build counterbalanced review tasks")
    p.add_argument("--pairs", required=True, help="text file of clip pairs or clips")
    p.add_argument("--mode", choices=tuple(_MODE_TOKENS), default="2afc")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rule", default=None, help="rule context for compliance tasks")
    p.add_argument("--out", default=None, help="output JSON (default stdout)")
    p.set_defaults(func=cmd_review_batch)

    p = sub.add_parser("serve", help="run the review HTTP service")
    p.add_argument("--tasks", required=True, help="task batch JSON")
    p.add_argument("--log", required=True, help="verdict log path")
    p.add_argument("--media", required=True, help="directory of clip frame folders")
    p.add_argument("--clip-models", default=None, help="JSON map clip id to model name")
    p.add_argument("--models", default=None, help="two model names, comma separated")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8008)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("judge", help="run the automated judge over a task batch")
    p.add_argument("--tasks", required=True)
    p.add_argument("--media", required=True)
    p.add_argument("--endpoint", required=True, help="chat-completion base URL")
    p.add_argument("--judge-model", required=True)
    p.add_argument("--template", default="default-preference")
    p.add_argument("--instructions", default=None, help="file with instruction text")
    p.add_argument("--frame-step", type=int, default=4)
    p.add_argument("--retries", type=int, default=2)
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--log", required=True, help="verdict log to append to")
    p.set_defaults(func=cmd_judge)

    p = sub.add_parser("score", help="weighted composite score of a report")
    p.add_argument("--report", required=True)
    p.add_argument("--weights", required=True, help="JSON with weights and normalization")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("report", help="assemble every track metric into one report")
    _add_pair_args(p)
    p.add_argument("--manifest", default=None, help="scene manifest for displacement stats")
    p.add_argument("--fmt", choices=("native", "nuscenes"), default="native")
    p.add_argument("--scene-id", default=None)
    p.add_argument("--model", required=True)
    p.add_argument("--window", type=float, default=DEFAULT_WINDOW_S)
    p.add_argument("--tolerance", type=int, default=DEFAULT_TOLERANCE)
    p.add_argument("--frame", type=int, default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    cfg = RunConfig.from_args(ns)
    try:
        return int(ns.func(cfg, ns) or 0)
    except TransportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ScaEvalError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
