"""Actor dynamics metrics: displacement, duration matching, presence, centroids.

All functions are pure over immutable manifests/tracks and aggregate with
order-independent reductions, so callers may parallelize across clips.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .data import Category
from .errors import EmptyInput, WindowTooLong
from .geometry import project_frame

ALL_CATEGORIES = "All"

# "All" aggregates the three semantic-critical classes; the Other bucket
# holds non-actor labels and is reported only when asked for by name.
_ALL_SET = (Category.HUMAN, Category.VEHICLE, Category.ANIMAL)


def _category_matches(cat: str, selector: str) -> bool:
    if selector == ALL_CATEGORIES:
        return cat in _ALL_SET
    return cat == selector


# --- displacement -------------------------------------------------------------


@dataclass(frozen=True)
class DisplacementStats:
    """Mean projected-centroid displacement over a fixed time window.

    mean_dx_over_w and mean_dy_over_h are fractions of image width and
    height; mean_dd_px is the raw Euclidean pixel distance.  Means are
    None when no sample exists.
    """

    category: str
    window_seconds: float
    mean_dx_over_w: Optional[float]
    mean_dy_over_h: Optional[float]
    mean_dd_px: Optional[float]
    count: int


def window_to_frames(window_seconds: float, fps: float) -> int:
    """Window length in frames, rounded half up."""
    return int(math.floor(window_seconds * fps + 0.5))


def displacement_stats(
    manifest,
    window_seconds: float,
    per: str = ALL_CATEGORIES,
    z_eps: float = 1e-6,
) -> DisplacementStats:
    """Average |Δx|, |Δy|, Δd of projected box centroids over a window.

    A sample is any (instance, t) where the instance projects to a
    visible box at both t and t+k, k = round(window × rate).  Δx and Δy
    are normalized by image width and height; Δd stays in pixels.

    Raises WindowTooLong when no frame pair is k apart, ValueError when
    the window rounds to zero frames.
    """
    if window_seconds <= 0:
        raise ValueError(f"window must be positive, got {window_seconds}")
    k = window_to_frames(window_seconds, manifest.fps)
    if k < 1:
        raise ValueError(f"window {window_seconds}s shorter than one frame interval")
    n = len(manifest.frames)
    if k > n - 1:
        raise WindowTooLong(window_seconds, n)

    # one batched projection pass per frame, reused by every (t, t+k) pair
    centroids = []
    categories: dict = {}
    for frame in manifest.frames:
        boxes = project_frame(frame, z_eps=z_eps)
        centroids.append({iid: b.centroid for iid, b in boxes.items() if b is not None})
        for ann in frame.annotations:
            categories[ann.instance_id] = ann.category

    dx_sum = dy_sum = dd_sum = 0.0
    count = 0
    for t in range(n - k):
        a, b = centroids[t], centroids[t + k]
        for iid, ca in a.items():
            cb = b.get(iid)
            if cb is None or not _category_matches(categories[iid], per):
                continue
            dx = abs(cb[0] - ca[0])
            dy = abs(cb[1] - ca[1])
            dx_sum += dx
            dy_sum += dy
            dd_sum += math.hypot(dx, dy)
            count += 1

    if count == 0:
        return DisplacementStats(per, window_seconds, None, None, None, 0)
    return DisplacementStats(
        per,
        window_seconds,
        dx_sum / count / manifest.image_width,
        dy_sum / count / manifest.image_height,
        dd_sum / count,
        count,
    )


# --- duration ------------------------------------------------------------------


def appearing_length(track) -> int:
    """Frames in the presence run that starts at frame 0 (0 if absent there).

    Re-entries after the first disappearance do not count: the measure is
    how long the actor remains present from the conditioning frame.
    """
    n = 0
    for obs in track.observations:
        if not obs.present:
            break
        n += 1
    return n


@dataclass(frozen=True)
class DurationStats:
    """Initial-run duration agreement between prediction and ground truth."""

    match_pct: float
    fp_pct: float
    fn_pct: float
    precision: float
    recall: float
    n_instances: int


def duration_stats(pairs: Sequence, tolerance: int = 0) -> DurationStats:
    """Classify each pair by initial-run length agreement.

    Match / FP / FN percentages run over pairs whose ground-truth run is
    non-empty: FP means the prediction keeps the actor longer than truth
    beyond the tolerance, FN shorter.  Precision and recall count frames
    across all pairs: TP = sum(min(L_gt, L_pred)), frame-FP =
    sum(max(0, L_pred - L_gt)), frame-FN = sum(max(0, L_gt - L_pred)).
    """
    if tolerance < 0:
        raise ValueError(f"tolerance must be >= 0, got {tolerance}")
    match = fp = fn = scored = 0
    tp_frames = fp_frames = fn_frames = 0
    for gt, pred in pairs:
        l_gt = appearing_length(gt)
        l_pred = appearing_length(pred)
        tp_frames += min(l_gt, l_pred)
        fp_frames += max(0, l_pred - l_gt)
        fn_frames += max(0, l_gt - l_pred)
        if l_gt <= 0:
            continue
        scored += 1
        if abs(l_pred - l_gt) <= tolerance:
            match += 1
        elif l_pred > l_gt:
            fp += 1
        else:
            fn += 1
    if scored == 0:
        raise EmptyInput("no pair with a non-empty ground-truth initial run")
    precision = 100.0 * tp_frames / (tp_frames + fp_frames) if tp_frames + fp_frames else 100.0
    recall = 100.0 * tp_frames / (tp_frames + fn_frames) if tp_frames + fn_frames else 100.0
    return DurationStats(
        100.0 * match / scored,
        100.0 * fp / scored,
        100.0 * fn / scored,
        precision,
        recall,
        scored,
    )


# --- presence curve -------------------------------------------------------------


@dataclass(frozen=True)
class PresenceCurve:
    """Per-frame percentage of GT-present actors the prediction retains.

    accuracy[k] is None at frames where no pair is GT-present.
    """

    accuracy: tuple


def presence_curve(pairs: Sequence, clip_len: int) -> PresenceCurve:
    if clip_len < 1:
        raise ValueError(f"clip_len must be >= 1, got {clip_len}")
    values = []
    for k in range(clip_len):
        gt_present = co_present = 0
        for gt, pred in pairs:
            if k >= gt.clip_length or not gt.observations[k].present:
                continue
            gt_present += 1
            if k < pred.clip_length and pred.observations[k].present:
                co_present += 1
        values.append(100.0 * co_present / gt_present if gt_present else None)
    return PresenceCurve(tuple(values))


# --- centroid distances -----------------------------------------------------------


@dataclass(frozen=True)
class CentroidDistStats:
    """Distribution of centroid distances over co-present pairs at one frame.

    std is the population standard deviation.  The histogram spans
    uniform bins from 0 to the 99.5th percentile with one overflow bin
    appended, so len(counts) == len(edges).
    """

    frame_index: int
    distances: np.ndarray
    mean: float
    std: float
    bin_edges: np.ndarray
    bin_counts: np.ndarray
    outlier_threshold: float
    outliers: int

    def outlier_count(self, threshold: float) -> int:
        return int((self.distances > threshold).sum())


def centroid_distances(
    pairs: Sequence,
    frame: int,
    hist_bins: int = 50,
    outlier_threshold: float = 100.0,
) -> CentroidDistStats:
    """Euclidean centroid distances where both tracks are present at frame.

    Raises EmptyInput when no co-present pair carries centroids there.
    """
    if hist_bins < 1:
        raise ValueError(f"hist_bins must be >= 1, got {hist_bins}")
    dists = []
    for gt, pred in pairs:
        if frame >= gt.clip_length or frame >= pred.clip_length:
            continue
        a, b = gt.observations[frame], pred.observations[frame]
        if not (a.present and b.present) or a.centroid is None or b.centroid is None:
            continue
        dists.append(math.hypot(b.centroid[0] - a.centroid[0], b.centroid[1] - a.centroid[1]))
    if not dists:
        raise EmptyInput(f"no co-present pair with centroids at frame {frame}")
    arr = np.array(dists, dtype=np.float64)
    mean = float(arr.mean())
    std = float(arr.std())  # population
    hi = float(np.percentile(arr, 99.5))
    if hi <= 0.0:
        hi = 1.0
    edges = np.linspace(0.0, hi, hist_bins + 1)
    counts = np.histogram(arr, bins=edges)[0]
    overflow = int((arr > hi).sum())
    counts = np.append(counts, overflow)
    return CentroidDistStats(
        frame,
        arr,
        mean,
        std,
        edges,
        counts,
        float(outlier_threshold),
        int((arr > outlier_threshold).sum()),
    )
