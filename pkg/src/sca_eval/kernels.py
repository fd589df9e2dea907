"""Numeric hot loops with switchable numba / pure-numpy backends.

Three kernels dominate runtime on real inputs: separable image resampling
(every frame of every clip goes through it twice), run-length mask decoding
(one 1.4-megapixel mask per actor per frame), and batched corner projection
(eight corners per annotation per frame).  Each kernel has a numba @njit
implementation and a pure-numpy fallback.

Backend selection, via the ``SCA_EVAL_BACKEND`` environment variable:

* unset or ``auto`` -- numba when importable, else numpy;
* ``numpy``         -- force the numpy fallback;
* ``numba``         -- require numba, raise if it is not importable.

Both backends accumulate per output element in identical tap order, so a
given input produces the same bytes on either path up to BLAS-free ops;
tests pin agreement against independent oracles rather than across backends.

``benchmarks/bench_kernels.py`` times the two paths side by side.
"""

from __future__ import annotations

import os

import numpy as np

ENV_FLAG = "SCA_EVAL_BACKEND"

_VALID = ("numpy", "numba")


def _numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def _pick_backend() -> str:
    choice = os.environ.get(ENV_FLAG, "auto").strip().lower()
    if choice in ("", "auto"):
        return "numba" if _numba_available() else "numpy"
    if choice not in _VALID:
        raise ValueError(f"{ENV_FLAG} must be one of {_VALID}, got {choice!r}")
    if choice == "numba" and not _numba_available():
        raise ImportError(f"{ENV_FLAG}=numba but numba is not importable")
    return choice


_backend = _pick_backend()


def active_backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    """Switch backend at runtime (used by the benchmark and tests)."""
    global _backend
    if name not in _VALID:
        raise ValueError(f"backend must be one of {_VALID}, got {name!r}")
    if name == "numba" and not _numba_available():
        raise ImportError("numba backend requested but numba is not importable")
    _backend = name


# --- pure-numpy implementations --------------------------------------------

def _resample_axis0_np(img: np.ndarray, idx: np.ndarray, wts: np.ndarray) -> np.ndarray:
    out = np.zeros((idx.shape[0],) + img.shape[1:], dtype=np.float64)
    for k in range(idx.shape[1]):
        out += wts[:, k][:, None, None] * img[idx[:, k]]
    return out


def _fill_runs_np(values: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    return np.repeat(values, lengths).astype(np.uint8, copy=False)


def _project_points_np(
    pts: np.ndarray,
    rot: np.ndarray,
    trans: np.ndarray,
    fx: float,
    fy: float,
    cx: float,
    cy: float,
    z_eps: float,
) -> np.ndarray:
    cam = pts @ rot.T + trans
    z = cam[:, 2]
    out = np.empty((pts.shape[0], 3), dtype=np.float64)
    out[:, 2] = z
    front = z > z_eps
    safe_z = np.where(front, z, 1.0)
    out[:, 0] = np.where(front, fx * cam[:, 0] / safe_z + cx, np.nan)
    out[:, 1] = np.where(front, fy * cam[:, 1] / safe_z + cy, np.nan)
    return out


# --- numba implementations --------------------------------------------------

if _numba_available():
    import numba as nb

    @nb.njit(cache=True)
    def _resample_axis0_nb(img, idx, wts, out):  # pragma: no cover - jitted
        oh, taps = idx.shape
        _, w, c = img.shape
        for i in range(oh):
            for k in range(taps):
                src = idx[i, k]
                wt = wts[i, k]
                for x in range(w):
                    for ch in range(c):
                        out[i, x, ch] += wt * img[src, x, ch]

    @nb.njit(cache=True)
    def _fill_runs_nb(values, lengths, out):  # pragma: no cover - jitted
        pos = 0
        for i in range(values.shape[0]):
            v = values[i]
            for _ in range(lengths[i]):
                out[pos] = v
                pos += 1

    @nb.njit(cache=True)
    def _project_points_nb(pts, rot, trans, fx, fy, cx, cy, z_eps, out):  # pragma: no cover
        n = pts.shape[0]
        for i in range(n):
            px = rot[0, 0] * pts[i, 0] + rot[0, 1] * pts[i, 1] + rot[0, 2] * pts[i, 2] + trans[0]
            py = rot[1, 0] * pts[i, 0] + rot[1, 1] * pts[i, 1] + rot[1, 2] * pts[i, 2] + trans[1]
            pz = rot[2, 0] * pts[i, 0] + rot[2, 1] * pts[i, 1] + rot[2, 2] * pts[i, 2] + trans[2]
            out[i, 2] = pz
            if pz > z_eps:
                out[i, 0] = fx * px / pz + cx
                out[i, 1] = fy * py / pz + cy
            else:
                out[i, 0] = np.nan
                out[i, 1] = np.nan


# --- public dispatch ---------------------------------------------------------

def resample_axis0(img: np.ndarray, idx: np.ndarray, wts: np.ndarray) -> np.ndarray:
    """Apply per-output-row tap weights along axis 0 of an (H, W, C) image.

    idx[i, k] is the clamped source row of tap k for output row i and
    wts[i, k] its weight; rows of wts sum to 1.
    """
    img = np.ascontiguousarray(img, dtype=np.float64)
    idx = np.ascontiguousarray(idx, dtype=np.int64)
    wts = np.ascontiguousarray(wts, dtype=np.float64)
    if _backend == "numba":
        out = np.zeros((idx.shape[0],) + img.shape[1:], dtype=np.float64)
        _resample_axis0_nb(img, idx, wts, out)
        return out
    return _resample_axis0_np(img, idx, wts)


def fill_runs(values: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """Expand run-length (value, length) pairs into a flat uint8 array."""
    values = np.ascontiguousarray(values, dtype=np.uint8)
    lengths = np.ascontiguousarray(lengths, dtype=np.int64)
    if _backend == "numba":
        out = np.empty(int(lengths.sum()), dtype=np.uint8)
        _fill_runs_nb(values, lengths, out)
        return out
    return _fill_runs_np(values, lengths)


def project_points(
    pts: np.ndarray,
    rot: np.ndarray,
    trans: np.ndarray,
    fx: float,
    fy: float,
    cx: float,
    cy: float,
    z_eps: float,
) -> np.ndarray:
    """Affine-transform points into the camera frame and apply the pinhole map.

    Returns an (N, 3) array of (u, v, z_cam); u and v are NaN wherever
    z_cam <= z_eps (point at or behind the image plane).
    """
    pts = np.ascontiguousarray(pts, dtype=np.float64)
    rot = np.ascontiguousarray(rot, dtype=np.float64)
    trans = np.ascontiguousarray(trans, dtype=np.float64)
    if _backend == "numba":
        out = np.empty((pts.shape[0], 3), dtype=np.float64)
        _project_points_nb(pts, rot, trans, float(fx), float(fy), float(cx), float(cy), float(z_eps), out)
        return out
    return _project_points_np(pts, rot, trans, float(fx), float(fy), float(cx), float(cy), float(z_eps))
