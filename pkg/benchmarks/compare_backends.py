#!/usr/bin/env python3
"""Time the numba kernels against the pure-numpy fallback.

Runs each hot kernel on a production-scale workload with both backends
and prints a speedup table. Usage: python benchmarks/compare_backends.py
"""

import time

import numpy as np

import omniview as ov
from omniview import kernels_numba, kernels_numpy
from omniview.projection import equirect_pixel_dirs


def best_of(fn, repeats=3):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def workloads():
    rng = np.random.default_rng(1)

    img = rng.random((1024, 2048, 3)).astype(np.float32)
    xs = rng.uniform(0.0, 2048.0, 2_000_000)
    ys = rng.uniform(0.0, 1024.0, 2_000_000)
    yield "bilinear_wrap (2M samples, 2048x1024x3)", (
        lambda k: k.bilinear_wrap(img, xs, ys)
    )

    vimg = rng.random((256, 256, 3)).astype(np.float32)
    vp = ov.Viewport(ov.normalize_dir(30.0, 20.0), 24.0, 256)
    frame = vp.frame.as_matrix()
    tan_half = vp.frame.tan_half
    vecs = equirect_pixel_dirs(1024, 512)

    def run_accumulate(k):
        accum = np.zeros((512, 1024, 3))
        weight = np.zeros((512, 1024))
        for _ in range(20):
            k.accumulate_viewport(accum, weight, vimg, frame, tan_half, vecs)

    yield "accumulate_viewport (20 passes, 1024x512)", run_accumulate

    tess = ov.make_tessellation(240, 24.0, 64)
    frames = tess.frames_matrix
    lons, lats = ov.vogel_points(100_000)
    dirs = ov.dir_to_vec(lons, lats)
    yield "overlap_counts (100k dirs x 240 viewports)", (
        lambda k: k.overlap_counts(dirs, frames, tess.tan_half)
    )

    stripe = np.where((np.arange(1024) // 8) % 2 == 0, 0.2, 0.8).astype(np.float32)
    lum = np.tile(stripe, (512, 1))
    rows, cols = ov.detect_vertical_edges(ov.EquirectImage(lum), 0.04)
    yield f"edge_widths ({rows.size} edges, 1024x512)", (
        lambda k: k.edge_widths(lum, rows, cols, 256)
    )


def main():
    print(f"{'kernel':<45} {'numpy':>9} {'numba':>9} {'speedup':>8}")
    for name, run in workloads():
        run(kernels_numba)  # JIT warmup
        t_np = best_of(lambda: run(kernels_numpy))
        t_nb = best_of(lambda: run(kernels_numba))
        print(f"{name:<45} {t_np:>8.3f}s {t_nb:>8.3f}s {t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
