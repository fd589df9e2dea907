"""Deterministic crop and resample pipeline feeding FID/FVD feature extractors.

The contract is bit-reproducibility: given the same input image, every
platform and backend must produce the same float64 output.  Resampling is
separable (rows, then columns) with precomputed tap weights shared by both
compute backends.

Conventions, also recorded in report metadata:
* Lanczos kernel a=3, antialiased on downscale (filter scale = max(in/out, 1)).
* Bilinear uses 2 taps and no antialias, half-pixel centers (align corners off).
* Out-of-range taps sample the clamped edge pixel (replicate padding).
* Crop extents round half up; crop offsets floor the centering remainder.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels

FID_W, FID_H = 448, 256
FVD_W, FVD_H = 224, 224

LANCZOS_A = 3


@dataclass(frozen=True)
class CropPlan:
    """Center-crop window bringing a source to a target aspect ratio."""

    src_w: int
    src_h: int
    crop_x: int
    crop_y: int
    crop_w: int
    crop_h: int
    out_w: int
    out_h: int
    resample: str

    def __post_init__(self):
        if self.crop_x < 0 or self.crop_y < 0:
            raise ValueError("crop offset out of bounds")
        if self.crop_x + self.crop_w > self.src_w or self.crop_y + self.crop_h > self.src_h:
            raise ValueError("crop window exceeds source")


def _round_half_up_ratio(a: int, b: int) -> int:
    """round(a/b) with exact integer arithmetic, halves up."""
    return (2 * a + b) // (2 * b)


def plan_crop(src_w: int, src_h: int, out_w: int = FID_W, out_h: int = FID_H,
              resample: str = "lanczos") -> CropPlan:
    """Center-crop plan matching the target aspect ratio within one pixel.

    Wider-than-target sources lose width, taller ones lose height; the
    ratio comparison is exact via integer cross products, so no float
    enters the plan.
    """
    if src_w < 1 or src_h < 1 or out_w < 1 or out_h < 1:
        raise ValueError("all dimensions must be >= 1")
    lhs = src_w * out_h
    rhs = out_w * src_h
    if lhs > rhs:  # source wider: crop width
        crop_w = max(1, _round_half_up_ratio(src_h * out_w, out_h))
        crop_h = src_h
    elif lhs < rhs:  # source taller: crop height
        crop_w = src_w
        crop_h = max(1, _round_half_up_ratio(src_w * out_h, out_w))
    else:
        crop_w, crop_h = src_w, src_h
    crop_x = (src_w - crop_w) // 2
    crop_y = (src_h - crop_h) // 2
    return CropPlan(src_w, src_h, crop_x, crop_y, crop_w, crop_h, out_w, out_h, resample)


# --- tap weight construction ---------------------------------------------------


def _lanczos(t: np.ndarray) -> np.ndarray:
    # sinc(t) * sinc(t/a) inside |t| < a, zero outside
    t = np.abs(t)
    out = np.zeros_like(t)
    inside = t < LANCZOS_A
    ti = t[inside]
    pi_t = np.pi * ti
    with np.errstate(invalid="ignore"):
        val = np.where(
            ti == 0.0,
            1.0,
            LANCZOS_A * np.sin(pi_t) * np.sin(pi_t / LANCZOS_A) / (pi_t * pi_t),
        )
    out[inside] = val
    return out


def lanczos_weights(n_in: int, n_out: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-output-row tap indices and normalized weights for Lanczos-3.

    Downscales widen the kernel by the scale factor (antialias); taps
    falling outside the image are index-clamped onto the edge pixel while
    keeping the weight computed at the true tap position.
    """
    scale = n_in / n_out
    fscale = max(scale, 1.0)
    support = LANCZOS_A * fscale
    centers = (np.arange(n_out, dtype=np.float64) + 0.5) * scale - 0.5
    lo = np.ceil(centers - support).astype(np.int64)
    hi = np.floor(centers + support).astype(np.int64)
    width = int((hi - lo).max()) + 1
    idx = lo[:, None] + np.arange(width, dtype=np.int64)[None, :]
    t = (idx - centers[:, None]) / fscale
    wts = _lanczos(t)
    wts[idx > hi[:, None]] = 0.0  # padding taps beyond each row's support
    wts = wts / wts.sum(axis=1, keepdims=True)
    np.clip(idx, 0, n_in - 1, out=idx)
    return idx, wts


def bilinear_weights(n_in: int, n_out: int) -> tuple[np.ndarray, np.ndarray]:
    """Two-tap bilinear weights with half-pixel centers and no antialias."""
    scale = n_in / n_out
    centers = (np.arange(n_out, dtype=np.float64) + 0.5) * scale - 0.5
    j0 = np.floor(centers).astype(np.int64)
    t = centers - j0
    idx = np.stack([j0, j0 + 1], axis=1)
    wts = np.stack([1.0 - t, t], axis=1)
    np.clip(idx, 0, n_in - 1, out=idx)
    return idx, wts


_WEIGHT_FNS = {"lanczos": lanczos_weights, "bilinear": bilinear_weights}


def _as_hwc(image: np.ndarray) -> tuple[np.ndarray, bool]:
    img = np.asarray(image, dtype=np.float64)
    if img.ndim == 2:
        return img[:, :, None], True
    if img.ndim == 3:
        return img, False
    raise ValueError(f"image must be (H, W) or (H, W, C), got shape {image.shape}")


def resample(image: np.ndarray, out_h: int, out_w: int, method: str = "lanczos") -> np.ndarray:
    """Separable resample: rows first, then columns."""
    weight_fn = _WEIGHT_FNS.get(method)
    if weight_fn is None:
        raise ValueError(f"unknown resample method {method!r}")
    img, squeeze = _as_hwc(image)
    h_in, w_in, _ = img.shape
    if h_in != out_h:
        idx, wts = weight_fn(h_in, out_h)
        img = kernels.resample_axis0(img, idx, wts)
    if w_in != out_w:
        idx, wts = weight_fn(w_in, out_w)
        img = kernels.resample_axis0(np.ascontiguousarray(img.transpose(1, 0, 2)), idx, wts)
        img = np.ascontiguousarray(img.transpose(1, 0, 2))
    return img[:, :, 0] if squeeze else img


def apply_crop(image: np.ndarray, plan: CropPlan) -> np.ndarray:
    img, squeeze = _as_hwc(image)
    if img.shape[0] != plan.src_h or img.shape[1] != plan.src_w:
        raise ValueError(
            f"plan made for {plan.src_w}x{plan.src_h}, image is {img.shape[1]}x{img.shape[0]}"
        )
    out = img[plan.crop_y : plan.crop_y + plan.crop_h, plan.crop_x : plan.crop_x + plan.crop_w]
    return out[:, :, 0] if squeeze else out


def preprocess_fid(image: np.ndarray) -> np.ndarray:
    """Center-crop to 448x256 aspect and Lanczos-resample to 448x256."""
    img, squeeze = _as_hwc(image)
    plan = plan_crop(img.shape[1], img.shape[0], FID_W, FID_H, "lanczos")
    out = resample(apply_crop(img, plan), FID_H, FID_W, "lanczos")
    return out[:, :, 0] if squeeze else out


def preprocess_fvd(frames) -> list:
    """FID pipeline per frame, then bilinear to 224x224."""
    out = []
    dims = None
    for frame in frames:
        img, squeeze = _as_hwc(frame)
        if dims is None:
            dims = img.shape[:2]
        elif img.shape[:2] != dims:
            raise ValueError(f"frame dims changed from {dims} to {img.shape[:2]}")
        mid = preprocess_fid(img)
        small = resample(mid, FVD_H, FVD_W, "bilinear")
        out.append(small[:, :, 0] if squeeze else small)
    return out


# --- portable pixmap fixtures ----------------------------------------------------


def read_ppm(path) -> np.ndarray:
    """Read a binary P6 portable pixmap into a (H, W, 3) uint8 array."""
    with open(path, "rb") as fh:
        data = fh.read()
    fields = []
    pos = 0
    while len(fields) < 4:
        if pos >= len(data):
            raise ValueError(f"{path}: truncated PPM header")
        if data[pos : pos + 1] == b"#":  # comment to end of line
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
            continue
        if data[pos : pos + 1].isspace():
            pos += 1
            continue
        end = pos
        while end < len(data) and not data[end : end + 1].isspace():
            end += 1
        fields.append(data[pos:end])
        pos = end
    pos += 1  # single whitespace after maxval
    if fields[0] != b"P6":
        raise ValueError(f"{path}: not a P6 pixmap")
    width, height, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    if maxval != 255:
        raise ValueError(f"{path}: only maxval 255 supported, got {maxval}")
    n = width * height * 3
    raw = data[pos : pos + n]
    if len(raw) != n:
        raise ValueError(f"{path}: expected {n} pixel bytes, got {len(raw)}")
    return np.frombuffer(raw, dtype=np.uint8).reshape(height, width, 3).copy()


def write_ppm(path, image: np.ndarray) -> None:
    """Write a (H, W, 3) array as binary P6; floats round half up and clamp."""
    img = np.asarray(image)
    if img.ndim == 2:
        img = np.repeat(img[:, :, None], 3, axis=2)
    if img.dtype != np.uint8:
        img = np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8)
    h, w, c = img.shape
    if c != 3:
        raise ValueError(f"need 3 channels, got {c}")
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode())
        fh.write(img.tobytes())
