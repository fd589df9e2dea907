"""Run-length encoding of binary masks.

The wire form is `v0:n0,v1:n1,...`, row-major over the image, where each
v is 0 or 1 and each n is a positive run length.  Masks are stored this
way in track files so that a 1.4-megapixel mask costs a few dozen bytes.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .errors import MalformedRle


def parse_rle(text: str) -> tuple[np.ndarray, np.ndarray]:
    """Split RLE text into (values, lengths) arrays without decoding.

    Raises MalformedRle on empty input, non-binary values, or
    non-positive lengths.
    """
    if not text or not text.strip():
        raise MalformedRle(text, "empty run list")
    values, lengths = [], []
    for part in text.strip().split(","):
        v, sep, n = part.partition(":")
        if not sep:
            raise MalformedRle(text, f"run {part!r} lacks ':'")
        try:
            vi, ni = int(v), int(n)
        except ValueError:
            raise MalformedRle(text, f"non-integer run {part!r}") from None
        if vi not in (0, 1):
            raise MalformedRle(text, f"run value {vi} not in {{0,1}}")
        if ni <= 0:
            raise MalformedRle(text, f"non-positive run length {ni}")
        values.append(vi)
        lengths.append(ni)
    return np.array(values, dtype=np.uint8), np.array(lengths, dtype=np.int64)


def decode_rle(text: str, width: int | None = None) -> np.ndarray:
    """Expand RLE text to a flat uint8 array, or to (H, W) when width given.

    The decoded length must divide evenly by width when reshaping.
    """
    values, lengths = parse_rle(text)
    flat = kernels.fill_runs(values, lengths)
    if width is None:
        return flat
    if width <= 0 or flat.size % width != 0:
        raise MalformedRle(text, f"decoded length {flat.size} not divisible by width {width}")
    return flat.reshape(-1, width)


def encode_rle(mask: np.ndarray) -> str:
    """Encode a binary mask (flat or 2D, row-major) as RLE text."""
    flat = np.asarray(mask).reshape(-1)
    if flat.size == 0:
        raise MalformedRle("", "cannot encode empty mask")
    flat = (flat != 0).astype(np.uint8)
    change = np.flatnonzero(np.diff(flat)) + 1
    starts = np.concatenate(([0], change))
    ends = np.concatenate((change, [flat.size]))
    return ",".join(f"{int(flat[s])}:{int(e - s)}" for s, e in zip(starts, ends))


def rle_population(text: str) -> int:
    """Number of 1 pixels, computed from runs without decoding."""
    values, lengths = parse_rle(text)
    return int(lengths[values == 1].sum())


def rle_total(text: str) -> int:
    """Total pixel count covered by the runs."""
    _, lengths = parse_rle(text)
    return int(lengths.sum())
