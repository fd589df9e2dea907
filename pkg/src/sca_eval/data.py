"""Scene and track data model plus file ingestion.

Two line-delimited native formats (hand-writable for desk-scale fixtures)
and an adapter for nuScenes-style relational JSON tables.  Everything is
immutable after load and safe to share across threads.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

import numpy as np

from .errors import (
    DanglingReference,
    DuplicateObservation,
    InconsistentClipLength,
    MalformedRecord,
    MissingTable,
)
from .geometry import CameraCalib, Pose, Quaternion
from .rle import rle_population


class Category:
    """Actor taxonomy: the three analyzed classes plus a catch-all."""

    HUMAN = "Human"
    VEHICLE = "Vehicle"
    ANIMAL = "Animal"
    OTHER = "Other"

    ALL = (HUMAN, VEHICLE, ANIMAL, OTHER)

    @staticmethod
    def parse(label: str) -> str:
        """Map a raw label to the taxonomy; unknown labels become Other.

        Dotted dataset labels such as human.pedestrian.adult match on
        their first component.
        """
        head = label.split(".", 1)[0].strip().lower()
        if head in ("human", "pedestrian", "person"):
            return Category.HUMAN
        if head in ("vehicle", "car", "truck", "bus", "bicycle", "motorcycle"):
            return Category.VEHICLE
        if head == "animal":
            return Category.ANIMAL
        return Category.OTHER


@dataclass(frozen=True)
class Source:
    """Origin of a track: recorded ground truth or a named model's output."""

    kind: str  # "gt" | "model"
    model_name: str = ""

    def __post_init__(self):
        if self.kind not in ("gt", "model"):
            raise ValueError(f"source kind must be gt or model, got {self.kind!r}")
        if self.kind == "model" and not self.model_name:
            raise ValueError("model source requires a model name")

    @property
    def is_ground_truth(self) -> bool:
        return self.kind == "gt"

    @staticmethod
    def ground_truth() -> "Source":
        return Source("gt")

    @staticmethod
    def model(name: str) -> "Source":
        return Source("model", name)

    def token(self) -> str:
        return "gt" if self.kind == "gt" else self.model_name


@dataclass(frozen=True, eq=False)
class TrackObservation:
    """One frame of a track: presence plus optional centroid/mask data."""

    frame_index: int
    present: bool
    centroid: Optional[np.ndarray] = None
    mask_area: Optional[int] = None
    mask_rle: Optional[str] = None

    def __post_init__(self):
        if not self.present and (
            self.centroid is not None or self.mask_area is not None or self.mask_rle is not None
        ):
            raise ValueError(f"absent observation at frame {self.frame_index} carries data fields")
        if self.centroid is not None:
            object.__setattr__(self, "centroid", np.asarray(self.centroid, dtype=np.float64))

    def __eq__(self, other):
        if not isinstance(other, TrackObservation):
            return NotImplemented
        if (self.centroid is None) != (other.centroid is None):
            return False
        return (
            self.frame_index == other.frame_index
            and self.present == other.present
            and (self.centroid is None or np.array_equal(self.centroid, other.centroid))
            and self.mask_area == other.mask_area
            and self.mask_rle == other.mask_rle
        )


@dataclass(frozen=True)
class Track:
    """Dense per-frame series for one instance in one clip.

    observations[i].frame_index == i always holds; frames with no data
    are stored as present=False fillers so every track spans the full
    clip length.
    """

    clip_id: str
    source: Source
    instance_id: str
    category: str
    observations: tuple

    def __post_init__(self):
        for i, obs in enumerate(self.observations):
            if obs.frame_index != i:
                raise ValueError(
                    f"track {self.clip_id}/{self.instance_id}: observation {i} has frame_index {obs.frame_index}"
                )

    @property
    def clip_length(self) -> int:
        return len(self.observations)

    @property
    def presence(self) -> np.ndarray:
        return np.array([o.present for o in self.observations], dtype=bool)


def all_absent_track(like: Track, source: Source) -> Track:
    """Synthetic never-present counterpart used when a model omits an actor."""
    obs = tuple(TrackObservation(i, False) for i in range(like.clip_length))
    return Track(like.clip_id, source, like.instance_id, like.category, obs)


@dataclass(frozen=True, eq=False)
class Annotation3D:
    """Oriented 3D box for one instance at one frame, in the global frame."""

    instance_id: str
    category: str
    center_global: np.ndarray
    size: tuple  # (width, length, height) meters
    orientation_global: Quaternion

    def __post_init__(self):
        object.__setattr__(self, "center_global", np.asarray(self.center_global, dtype=np.float64))
        if any(s <= 0 for s in self.size):
            raise ValueError(f"annotation {self.instance_id}: non-positive size {self.size}")
        if abs(self.orientation_global.norm() - 1.0) > 1e-9:
            object.__setattr__(self, "orientation_global", self.orientation_global.normalize())

    def __eq__(self, other):
        if not isinstance(other, Annotation3D):
            return NotImplemented
        return (
            self.instance_id == other.instance_id
            and self.category == other.category
            and np.array_equal(self.center_global, other.center_global)
            and self.size == other.size
            and self.orientation_global == other.orientation_global
        )


@dataclass(frozen=True)
class FrameRecord:
    frame_index: int
    timestamp_us: int
    ego_pose: Pose
    camera: CameraCalib
    annotations: tuple


@dataclass(frozen=True)
class SceneManifest:
    scene_id: str
    frames: tuple
    image_width: int
    image_height: int
    keyframe_rate: Fraction

    def __post_init__(self):
        if self.image_width <= 0 or self.image_height <= 0:
            raise ValueError("image dimensions must be positive")
        ts = [f.timestamp_us for f in self.frames]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError(f"scene {self.scene_id}: timestamps not strictly increasing")

    @property
    def fps(self) -> float:
        return float(self.keyframe_rate)


# --- native manifest format --------------------------------------------------


def _floats(parts: list, line: str, n: int) -> list:
    if len(parts) != n:
        raise MalformedRecord(line, f"expected {n} numeric fields, got {len(parts)}")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise MalformedRecord(line, "non-numeric field") from None


def parse_manifest_text(text: str) -> SceneManifest:
    scene_id = None
    width = height = None
    rate = None
    frames: dict = {}
    order: list = []
    egos: dict = {}
    cams: dict = {}
    anns: dict = {}

    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "scene":
            if len(parts) != 5:
                raise MalformedRecord(line, "scene line needs id, width, height, fps")
            scene_id = parts[1]
            try:
                width, height = int(parts[2]), int(parts[3])
                num, _, den = parts[4].partition("/")
                rate = Fraction(int(num), int(den) if den else 1)
            except (ValueError, ZeroDivisionError):
                raise MalformedRecord(line, "bad scene header numbers") from None
        elif tag == "frame":
            if len(parts) != 3:
                raise MalformedRecord(line, "frame line needs index and timestamp")
            try:
                idx, ts = int(parts[1]), int(parts[2])
            except ValueError:
                raise MalformedRecord(line, "non-integer frame fields") from None
            if idx in frames:
                raise MalformedRecord(line, f"duplicate frame index {idx}")
            frames[idx] = ts
            order.append(idx)
        elif tag == "ego":
            try:
                idx = int(parts[1])
            except (IndexError, ValueError):
                raise MalformedRecord(line, "ego line needs frame index") from None
            vals = _floats(parts[2:], line, 7)
            if idx in egos:
                raise MalformedRecord(line, f"duplicate ego pose for frame {idx}")
            egos[idx] = Pose(np.array(vals[0:3]), Quaternion(*vals[3:7]))
        elif tag == "cam":
            try:
                idx = int(parts[1])
            except (IndexError, ValueError):
                raise MalformedRecord(line, "cam line needs frame index") from None
            vals = _floats(parts[2:], line, 11)
            if idx in cams:
                raise MalformedRecord(line, f"duplicate camera for frame {idx}")
            cams[idx] = CameraCalib(
                Pose(np.array(vals[0:3]), Quaternion(*vals[3:7])),
                vals[7], vals[8], vals[9], vals[10],
            )
        elif tag == "ann":
            if len(parts) != 14:
                raise MalformedRecord(line, f"ann line needs 14 fields, got {len(parts)}")
            try:
                idx = int(parts[1])
            except ValueError:
                raise MalformedRecord(line, "non-integer ann frame index") from None
            instance, label = parts[2], parts[3]
            vals = _floats(parts[4:], line, 10)
            ann = Annotation3D(
                instance,
                Category.parse(label),
                np.array(vals[0:3]),
                (vals[3], vals[4], vals[5]),
                Quaternion(*vals[6:10]),
            )
            anns.setdefault(idx, []).append(ann)
        else:
            raise MalformedRecord(line, f"unknown record tag {tag!r}")

    if scene_id is None:
        raise MalformedRecord("", "missing scene header line")
    for idx in egos:
        if idx not in frames:
            raise DanglingReference(str(idx), "ego pose references undeclared frame")
    for idx in cams:
        if idx not in frames:
            raise DanglingReference(str(idx), "camera references undeclared frame")
    for idx in anns:
        if idx not in frames:
            raise DanglingReference(str(idx), "annotation references undeclared frame")
    for idx in order:
        if idx not in egos:
            raise DanglingReference(str(idx), "frame lacks an ego pose")
        if idx not in cams:
            raise DanglingReference(str(idx), "frame lacks a camera calibration")

    ordered = sorted(order, key=lambda i: frames[i])
    records = tuple(
        FrameRecord(i, frames[idx], egos[idx], cams[idx], tuple(anns.get(idx, ())))
        for i, idx in enumerate(ordered)
    )
    return SceneManifest(scene_id, records, width, height, rate)


def _fmt(*values) -> str:
    # shortest round-trip decimal form, stable across numpy scalar types
    return " ".join(repr(float(v)) for v in values)


def serialize_manifest(manifest: SceneManifest) -> str:
    """Emit native manifest text that reparses to an equal structure."""
    out = [
        f"scene {manifest.scene_id} {manifest.image_width} {manifest.image_height} "
        f"{manifest.keyframe_rate.numerator}/{manifest.keyframe_rate.denominator}"
    ]
    for f in manifest.frames:
        out.append(f"frame {f.frame_index} {f.timestamp_us}")
    for f in manifest.frames:
        t, q = f.ego_pose.translation, f.ego_pose.rotation
        out.append(f"ego {f.frame_index} {_fmt(t[0], t[1], t[2], q.w, q.x, q.y, q.z)}")
        c = f.camera
        t, q = c.extrinsic.translation, c.extrinsic.rotation
        out.append(
            f"cam {f.frame_index} {_fmt(t[0], t[1], t[2], q.w, q.x, q.y, q.z, c.fx, c.fy, c.cx, c.cy)}"
        )
        for a in f.annotations:
            ctr, s, q = a.center_global, a.size, a.orientation_global
            out.append(
                f"ann {f.frame_index} {a.instance_id} {a.category} "
                f"{_fmt(ctr[0], ctr[1], ctr[2], s[0], s[1], s[2], q.w, q.x, q.y, q.z)}"
            )
    return "\n".join(out) + "\n"


# --- track files --------------------------------------------------------------


def _parse_source(token: str) -> Source:
    return Source.ground_truth() if token.lower() == "gt" else Source.model(token)


def parse_tracks_text(text: str) -> list:
    """Parse track lines into dense Track structures.

    Clip length comes from an optional `clip <id> <len>` header line or,
    absent that, from the highest observed frame index per clip.
    """
    declared_len: dict = {}
    seen: dict = {}  # (clip, source, instance) -> {frame: TrackObservation}
    meta: dict = {}  # (clip, source, instance) -> category
    max_frame: dict = {}

    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "clip":
            if len(parts) != 3:
                raise MalformedRecord(line, "clip line needs id and length")
            try:
                n = int(parts[2])
            except ValueError:
                raise MalformedRecord(line, "non-integer clip length") from None
            if n <= 0:
                raise MalformedRecord(line, "clip length must be positive")
            prev = declared_len.get(parts[1])
            if prev is not None and prev != n:
                raise InconsistentClipLength(parts[1], f"declared twice: {prev} then {n}")
            declared_len[parts[1]] = n
            continue
        if tag != "obs":
            raise MalformedRecord(line, f"unknown record tag {tag!r}")
        if len(parts) < 7:
            raise MalformedRecord(line, "obs line needs clip, source, instance, category, frame, present")
        clip, source_tok, instance, label = parts[1], parts[2], parts[3], parts[4]
        try:
            frame = int(parts[5])
        except ValueError:
            raise MalformedRecord(line, "non-integer frame index") from None
        if frame < 0:
            raise MalformedRecord(line, f"negative frame index {frame}")
        if parts[6] not in ("0", "1"):
            raise MalformedRecord(line, f"present flag must be 0 or 1, got {parts[6]!r}")
        present = parts[6] == "1"
        rest = parts[7:]

        centroid = mask_area = mask_rle = None
        if present:
            if len(rest) == 0:
                pass  # presence-only observation
            elif len(rest) in (3, 4):
                try:
                    centroid = np.array([float(rest[0]), float(rest[1])])
                    mask_area = int(rest[2])
                except ValueError:
                    raise MalformedRecord(line, "non-numeric centroid or area") from None
                if mask_area < 0:
                    raise MalformedRecord(line, f"negative mask area {mask_area}")
                if len(rest) == 4:
                    mask_rle = rest[3]
                    pop = rle_population(mask_rle)
                    if pop != mask_area:
                        raise MalformedRecord(
                            line, f"mask_area {mask_area} disagrees with decoded population {pop}"
                        )
            else:
                raise MalformedRecord(line, f"expected 0, 3 or 4 data fields, got {len(rest)}")
        elif rest:
            raise MalformedRecord(line, "absent observation must not carry data fields")

        source = _parse_source(source_tok)
        key = (clip, source, instance)
        bucket = seen.setdefault(key, {})
        if frame in bucket:
            raise DuplicateObservation(clip, instance, frame)
        bucket[frame] = TrackObservation(frame, present, centroid, mask_area, mask_rle)
        prev_label = meta.setdefault(key, Category.parse(label))
        if prev_label != Category.parse(label):
            raise MalformedRecord(line, f"category changed mid-track: {prev_label} vs {label}")
        max_frame[clip] = max(max_frame.get(clip, -1), frame)

    tracks = []
    for key in seen:
        clip, source, instance = key
        length = declared_len.get(clip, max_frame.get(clip, -1) + 1)
        bucket = seen[key]
        over = [f for f in bucket if f >= length]
        if over:
            raise InconsistentClipLength(
                clip, f"observation at frame {max(over)} outside declared length {length}"
            )
        obs = tuple(bucket.get(i, TrackObservation(i, False)) for i in range(length))
        tracks.append(Track(clip, source, instance, meta[key], obs))
    tracks.sort(key=lambda t: (t.clip_id, t.source.token(), t.instance_id))
    return tracks


def serialize_tracks(tracks: Iterable) -> str:
    """Emit track text that reparses to equal structures."""
    lines = []
    seen_clip = set()
    for t in tracks:
        if t.clip_id not in seen_clip:
            lines.append(f"clip {t.clip_id} {t.clip_length}")
            seen_clip.add(t.clip_id)
    for t in tracks:
        for o in t.observations:
            base = f"obs {t.clip_id} {t.source.token()} {t.instance_id} {t.category} {o.frame_index}"
            if not o.present:
                lines.append(base + " 0")
            elif o.centroid is None:
                lines.append(base + " 1")
            else:
                tail = f" 1 {_fmt(o.centroid[0], o.centroid[1])} {o.mask_area}"
                if o.mask_rle is not None:
                    tail += f" {o.mask_rle}"
                lines.append(base + tail)
    return "\n".join(lines) + "\n"


def load_tracks(path) -> list:
    with open(path, encoding="utf-8") as fh:
        return parse_tracks_text(fh.read())


def pair_tracks(gt: list, pred: list) -> tuple:
    """Match tracks by (clip_id, instance_id).

    Returns (pairs, unmatched_pred).  Every ground-truth track yields a
    pair; missing predictions pair against an all-absent synthetic track
    (an omitted actor is a measurement, not an input error).  Prediction
    tracks with no ground-truth counterpart are returned separately.
    """
    pred_by_key = {(t.clip_id, t.instance_id): t for t in pred}
    fallback_source = pred[0].source if pred else Source.model("missing")
    pairs = []
    used = set()
    for g in sorted(gt, key=lambda t: (t.clip_id, t.instance_id)):
        key = (g.clip_id, g.instance_id)
        p = pred_by_key.get(key)
        if p is None:
            p = all_absent_track(g, fallback_source)
        else:
            used.add(key)
            if p.clip_length != g.clip_length:
                raise InconsistentClipLength(
                    g.clip_id,
                    f"instance {g.instance_id}: gt length {g.clip_length} vs prediction {p.clip_length}",
                )
        pairs.append((g, p))
    unmatched = [t for t in sorted(pred, key=lambda t: (t.clip_id, t.instance_id))
                 if (t.clip_id, t.instance_id) not in used]
    return pairs, unmatched


# --- nuScenes-style relational tables -----------------------------------------

_REQUIRED_TABLES = (
    "scene",
    "sample",
    "sample_data",
    "ego_pose",
    "calibrated_sensor",
    "sensor",
    "instance",
    "category",
    "sample_annotation",
)


def _load_tables(root) -> dict:
    tables = {}
    for name in _REQUIRED_TABLES:
        path = os.path.join(root, f"{name}.json")
        if not os.path.exists(path):
            raise MissingTable(name)
        with open(path, encoding="utf-8") as fh:
            tables[name] = json.load(fh)
    return tables


def _index(rows: list, table: str) -> dict:
    out = {}
    for row in rows:
        tok = row.get("token")
        if tok is None:
            raise MalformedRecord(json.dumps(row)[:80], f"{table} row lacks token")
        out[tok] = row
    return out


def _lookup(index: dict, token: str, what: str) -> dict:
    row = index.get(token)
    if row is None:
        raise DanglingReference(token, what)
    return row


def load_nuscenes_tables(root, scene_id: Optional[str] = None) -> SceneManifest:
    """Build a SceneManifest from nuScenes-style JSON tables.

    Front-camera key frames only; all other sensors and sweeps are
    ignored.  scene_id selects by scene token or name when the directory
    holds more than one scene.
    """
    t = _load_tables(root)
    scenes = t["scene"]
    if scene_id is not None:
        scenes = [s for s in scenes if s.get("token") == scene_id or s.get("name") == scene_id]
        if not scenes:
            raise DanglingReference(scene_id, "scene not found")
    if len(scenes) != 1:
        raise MalformedRecord("scene.json", f"{len(scenes)} scenes present; pass scene_id to pick one")
    scene = scenes[0]

    samples = _index(t["sample"], "sample")
    sensors = _index(t["sensor"], "sensor")
    ego_poses = _index(t["ego_pose"], "ego_pose")
    calibs = _index(t["calibrated_sensor"], "calibrated_sensor")
    instances = _index(t["instance"], "instance")
    categories = _index(t["category"], "category")

    # front-camera keyframe data per sample
    front_data: dict = {}
    for sd in t["sample_data"]:
        if not sd.get("is_key_frame"):
            continue
        calib = _lookup(calibs, sd["calibrated_sensor_token"], "calibrated_sensor for sample_data")
        sensor = _lookup(sensors, calib["sensor_token"], "sensor for calibrated_sensor")
        if sensor.get("channel") != "CAM_FRONT":
            continue
        front_data[sd["sample_token"]] = sd

    anns_by_sample: dict = {}
    for ann in t["sample_annotation"]:
        anns_by_sample.setdefault(ann["sample_token"], []).append(ann)

    # walk the sample chain from the scene's first token
    chain = []
    tok = scene.get("first_sample_token", "")
    while tok:
        sample = _lookup(samples, tok, "sample in scene chain")
        chain.append(sample)
        tok = sample.get("next", "")

    width = height = None
    frames = []
    for idx, sample in enumerate(chain):
        sd = front_data.get(sample["token"])
        if sd is None:
            raise DanglingReference(sample["token"], "sample has no CAM_FRONT keyframe")
        ego_row = _lookup(ego_poses, sd["ego_pose_token"], "ego_pose for sample_data")
        calib = _lookup(calibs, sd["calibrated_sensor_token"], "calibrated_sensor for sample_data")
        k = calib.get("camera_intrinsic")
        if not k:
            raise MalformedRecord(sd["calibrated_sensor_token"], "calibrated_sensor lacks camera_intrinsic")
        if width is None:
            width, height = int(sd["width"]), int(sd["height"])
        ego = Pose(np.array(ego_row["translation"], dtype=float), Quaternion(*ego_row["rotation"]))
        cam = CameraCalib(
            Pose(np.array(calib["translation"], dtype=float), Quaternion(*calib["rotation"])),
            float(k[0][0]), float(k[1][1]), float(k[0][2]), float(k[1][2]),
        )
        anns = []
        for raw in anns_by_sample.get(sample["token"], []):
            inst = _lookup(instances, raw["instance_token"], "instance for annotation")
            cat = _lookup(categories, inst["category_token"], "category for instance")
            anns.append(
                Annotation3D(
                    raw["instance_token"],
                    Category.parse(cat.get("name", "")),
                    np.array(raw["translation"], dtype=float),
                    tuple(float(s) for s in raw["size"]),
                    Quaternion(*raw["rotation"]),
                )
            )
        anns.sort(key=lambda a: a.instance_id)
        frames.append((int(sample["timestamp"]), idx, ego, cam, tuple(anns)))

    frames.sort(key=lambda f: f[0])
    records = tuple(
        FrameRecord(i, ts, ego, cam, anns) for i, (ts, _, ego, cam, anns) in enumerate(frames)
    )
    # key frames are annotated at 2 Hz in this table layout
    return SceneManifest(scene.get("name", scene["token"]), records, width, height, Fraction(2, 1))


def load_manifest(path, fmt: str = "native", scene_id: Optional[str] = None) -> SceneManifest:
    """Load a scene from a native manifest file or a table directory.

    fmt is "native" (line-delimited records) or "nuscenes" (directory of
    relational JSON tables).
    """
    if fmt == "native":
        with open(path, encoding="utf-8") as fh:
            return parse_manifest_text(fh.read())
    if fmt == "nuscenes":
        return load_nuscenes_tables(path, scene_id)
    raise ValueError(f"unknown manifest format {fmt!r}")
