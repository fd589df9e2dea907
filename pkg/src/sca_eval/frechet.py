"""Fréchet distance between feature distributions, with file ingestion.

Feature extraction is out of scope: vectors arrive as text files produced
by whatever network the caller trusts, and this module does the Gaussian
moment matching.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, MalformedRecord

# Relative eigenvalue floor: anything below -EIG_TOL * max(1, lambda_max)
# marks the covariance product as degenerate before clamping.
EIG_TOL = 1e-9


@dataclass(frozen=True)
class FeatureSet:
    """Labelled collection of equal-dimension feature vectors."""

    label: str
    vectors: np.ndarray  # (count, dim) float64

    def __post_init__(self):
        arr = np.asarray(self.vectors, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"{self.label}: vectors must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 2:
            raise ValueError(f"{self.label}: need at least 2 vectors for covariance, got {arr.shape[0]}")
        object.__setattr__(self, "vectors", arr)

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    @property
    def count(self) -> int:
        return int(self.vectors.shape[0])

    def __eq__(self, other):
        if not isinstance(other, FeatureSet):
            return NotImplemented
        return self.label == other.label and np.array_equal(self.vectors, other.vectors)


@dataclass(frozen=True)
class FrechetResult:
    """distance = mean_term + trace_term; degenerate flags eigenvalue clamping."""

    distance: float
    mean_term: float
    trace_term: float
    degenerate: bool


def load_features(path) -> FeatureSet:
    """Parse `features <label> <dim> <count>` plus one vector per line."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise MalformedRecord(str(path), "empty feature file")
    head = lines[0].split()
    if len(head) != 4 or head[0] != "features":
        raise MalformedRecord(lines[0], "expected header: features <label> <dim> <count>")
    label = head[1]
    try:
        dim, count = int(head[2]), int(head[3])
    except ValueError:
        raise MalformedRecord(lines[0], "non-integer dim or count") from None
    body = lines[1:]
    if len(body) != count:
        raise MalformedRecord(lines[0], f"header promises {count} vectors, file has {len(body)}")
    vectors = np.empty((count, dim), dtype=np.float64)
    for i, ln in enumerate(body):
        parts = ln.split()
        if len(parts) != dim:
            raise MalformedRecord(ln, f"vector {i} has {len(parts)} components, expected {dim}")
        try:
            vectors[i] = [float(p) for p in parts]
        except ValueError:
            raise MalformedRecord(ln, f"vector {i} has a non-numeric component") from None
    return FeatureSet(label, vectors)


def save_features(path, fs: FeatureSet) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"features {fs.label} {fs.dim} {fs.count}\n")
        for row in fs.vectors:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def _sqrt_psd(mat: np.ndarray) -> tuple[np.ndarray, bool]:
    """Principal square root of a symmetric PSD matrix via eigh."""
    vals, vecs = np.linalg.eigh(mat)
    floor = -EIG_TOL * max(1.0, float(vals.max(initial=0.0)))
    degenerate = bool((vals < floor).any())
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T, degenerate


def frechet_distance(a: FeatureSet, b: FeatureSet) -> FrechetResult:
    """Fréchet (2-Wasserstein squared) distance between Gaussian fits.

    distance = |mu_a - mu_b|^2 + Tr(S_a + S_b - 2 (S_a S_b)^{1/2}) with
    sample covariances.  The cross square root is taken through the
    symmetric product A S_b A with A = S_a^{1/2}, whose eigenvalues are
    clamped at zero; clamping sets the degenerate flag instead of failing.
    """
    if a.dim != b.dim:
        raise DimensionMismatch(a.dim, b.dim)
    mu_a = a.vectors.mean(axis=0)
    mu_b = b.vectors.mean(axis=0)
    sig_a = np.cov(a.vectors, rowvar=False, ddof=1).reshape(a.dim, a.dim)
    sig_b = np.cov(b.vectors, rowvar=False, ddof=1).reshape(b.dim, b.dim)

    diff = mu_a - mu_b
    mean_term = float(diff @ diff)

    root_a, degen_a = _sqrt_psd(sig_a)
    inner = root_a @ sig_b @ root_a
    inner = (inner + inner.T) / 2.0
    vals = np.linalg.eigh(inner)[0]
    floor = -EIG_TOL * max(1.0, float(vals.max(initial=0.0)))
    degen_inner = bool((vals < floor).any())
    vals = np.clip(vals, 0.0, None)
    trace_term = float(np.trace(sig_a) + np.trace(sig_b) - 2.0 * np.sqrt(vals).sum())

    return FrechetResult(mean_term + trace_term, mean_term, trace_term, degen_a or degen_inner)
