"""Per-frame mask-area difference statistics between generated and real clips."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .data import Category
from .errors import MalformedRle
from .rle import rle_population, rle_total


@dataclass(frozen=True)
class MaskDiffRow:
    """Signed area difference (prediction minus truth) at one frame index.

    avg_diff_px and std_px are None when no co-present pair contributes
    (count 0); std is the population standard deviation over instances,
    each instance weighted equally regardless of its size.
    """

    frame_index: int
    category: str
    avg_diff_px: Optional[float]
    std_px: Optional[float]
    count: int


def mask_area(rle_text: str, expected_total: Optional[int] = None) -> int:
    """Population count of 1-pixels straight from the run lengths.

    When expected_total is given (W*H of the image) the run lengths must
    sum to it exactly.
    """
    if expected_total is not None:
        total = rle_total(rle_text)
        if total != expected_total:
            raise MalformedRle(rle_text, f"runs cover {total} pixels, expected {expected_total}")
    return rle_population(rle_text)


def _areas_at(track, k: int) -> Optional[int]:
    if k >= track.clip_length:
        return None
    obs = track.observations[k]
    if not obs.present:
        return None
    if obs.mask_area is not None:
        return obs.mask_area
    if obs.mask_rle is not None:
        return rle_population(obs.mask_rle)
    return None


def mask_diff_table(
    pairs: Sequence,
    per: Optional[str] = None,
    categories: Sequence = (Category.HUMAN, Category.VEHICLE),
) -> list:
    """Average signed area difference per frame index and category.

    Frame 0 is the conditioning frame shared by both clips, so rows start
    at index 1.  diff = area_pred - area_gt over pairs co-present with
    area data; empty cells yield count-0 rows rather than vanishing.
    """
    cats = [per] if per is not None else list(categories)
    clip_len = max((gt.clip_length for gt, _ in pairs), default=0)
    rows = []
    for cat in cats:
        cat_pairs = [(g, p) for g, p in pairs if g.category == cat]
        for k in range(1, clip_len):
            diffs = []
            for gt, pred in cat_pairs:
                a_gt = _areas_at(gt, k)
                a_pred = _areas_at(pred, k)
                if a_gt is None or a_pred is None:
                    continue
                diffs.append(float(a_pred - a_gt))
            if diffs:
                arr = np.array(diffs)
                rows.append(MaskDiffRow(k, cat, float(arr.mean()), float(arr.std()), len(diffs)))
            else:
                rows.append(MaskDiffRow(k, cat, None, None, 0))
    return rows
