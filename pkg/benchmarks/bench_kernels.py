"""Side-by-side timing of the numba and pure-numpy kernel paths.

Times each hot kernel on realistic shapes (camera frames, per-frame
annotation batches, full-frame masks) plus one composite image pipeline,
and checks that both paths return identical results on the benchmark
inputs before reporting.  Run from the repository root:

    python3 benchmarks/bench_kernels.py --repeats 5
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from sca_eval import kernels
from sca_eval.preproc import lanczos_weights, preprocess_fid


def best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def make_cases(rng):
    frame = rng.uniform(0.0, 255.0, size=(900, 1600, 3))
    idx, wts = lanczos_weights(900, 256)

    # ~2000 alternating runs covering a full 1600 x 900 mask
    n_runs = 2000
    lengths = rng.integers(1, 1440, size=n_runs)
    lengths[-1] += 1600 * 900 - lengths.sum()
    values = (np.arange(n_runs) % 2).astype(np.uint8)

    pts = rng.normal(size=(400, 3)) * 5 + np.array([0.0, 0.0, 30.0])
    rot = np.linalg.qr(rng.normal(size=(3, 3)))[0]
    trans = rng.normal(size=3)

    return {
        "resample 900x1600x3 -> 256": lambda: kernels.resample_axis0(frame, idx, wts),
        "fill_runs 1.44 Mpx": lambda: kernels.fill_runs(values, lengths),
        "project 400 pts": lambda: kernels.project_points(
            pts, rot, trans, 800.0, 800.0, 800.0, 450.0, 1e-6
        ),
        "preprocess_fid frame": lambda: preprocess_fid(frame),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5, help="timing repeats, best kept")
    args = parser.parse_args()

    backends = ["numpy"]
    try:
        kernels.set_backend("numba")
        backends.append("numba")
    except ImportError:
        print("numba not importable, timing numpy only")

    rng = np.random.default_rng(12)
    cases = make_cases(rng)

    results = {}
    timings = {}
    for backend in backends:
        kernels.set_backend(backend)
        for name, fn in cases.items():
            fn()  # warm-up: triggers JIT compilation on the numba path
            timings[(backend, name)] = best_of(fn, args.repeats)
            results.setdefault(name, []).append(np.asarray(fn()))

    # matrix products route through BLAS on the numpy path, so agreement
    # is to rounding, not bytes
    for name, outs in results.items():
        if len(outs) == 2 and not np.allclose(
            outs[0], outs[1], rtol=1e-9, atol=1e-9, equal_nan=True
        ):
            raise SystemExit(f"backend mismatch on {name!r}")

    width = max(len(n) for n in cases)
    header = f"{'case':<{width}}  " + "  ".join(f"{b:>12}" for b in backends)
    if len(backends) == 2:
        header += f"  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name in cases:
        row = f"{name:<{width}}  "
        row += "  ".join(f"{timings[(b, name)] * 1e3:>10.3f}ms" for b in backends)
        if len(backends) == 2:
            ratio = timings[("numpy", name)] / timings[("numba", name)]
            row += f"  {ratio:>7.2f}x"
        print(row)


if __name__ == "__main__":
    main()
