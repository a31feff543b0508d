"""Pure-numpy implementations of the hot raster kernels.

These are the fallback backend (`OMNIVIEW_BACKEND=numpy`) and the
reference the numba kernels are tested against. Signatures match
``kernels_numba`` exactly.
"""

from __future__ import annotations

import numpy as np


def bilinear_wrap(img: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Sample (h, w, c) float32 raster at continuous coords, cyclic in x.

    Pixel p has its center at p + 0.5; y is clamped to the top/bottom rows.
    Returns (n, c) float32.
    """
    h, w = img.shape[0], img.shape[1]
    fx = np.asarray(xs, dtype=np.float64) - 0.5
    fy = np.clip(np.asarray(ys, dtype=np.float64) - 0.5, 0.0, float(h - 1))
    x0 = np.floor(fx).astype(np.int64)
    y0 = np.floor(fy).astype(np.int64)
    ax = (fx - x0)[:, None]
    ay = (fy - y0)[:, None]
    x0w = x0 % w
    x1w = (x0 + 1) % w
    y0c = np.clip(y0, 0, h - 1)
    y1c = np.clip(y0 + 1, 0, h - 1)
    top = img[y0c, x0w] * (1.0 - ax) + img[y0c, x1w] * ax
    bot = img[y1c, x0w] * (1.0 - ax) + img[y1c, x1w] * ax
    return (top * (1.0 - ay) + bot * ay).astype(np.float32)


def bilinear_clamp(img: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Like :func:`bilinear_wrap` but clamped on both axes (viewport rasters)."""
    h, w = img.shape[0], img.shape[1]
    fx = np.clip(np.asarray(xs, dtype=np.float64) - 0.5, 0.0, float(w - 1))
    fy = np.clip(np.asarray(ys, dtype=np.float64) - 0.5, 0.0, float(h - 1))
    x0 = np.floor(fx).astype(np.int64)
    y0 = np.floor(fy).astype(np.int64)
    ax = (fx - x0)[:, None]
    ay = (fy - y0)[:, None]
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    top = img[y0, x0] * (1.0 - ax) + img[y0, x1] * ax
    bot = img[y1, x0] * (1.0 - ax) + img[y1, x1] * ax
    return (top * (1.0 - ay) + bot * ay).astype(np.float32)


def accumulate_viewport(
    accum: np.ndarray,
    weight: np.ndarray,
    vimg: np.ndarray,
    frame: np.ndarray,
    tan_half: float,
    vecs: np.ndarray,
) -> None:
    """Gather one viewport image into an equirect accumulator, in place.

    ``vecs`` holds the unit direction of every equirect pixel center,
    row-major (h*w, 3). ``frame`` rows are (east, north, forward).
    Contributions use the tent weight (1-|u|)(1-|v|); pixels outside the
    strict footprint interior are untouched.
    """
    h, w = weight.shape
    size = vimg.shape[0]
    east, north, forward = frame[0], frame[1], frame[2]
    t = vecs @ forward
    # Directions inside the square footprint are within the corner angle
    # of the center, so a dot-product cull keeps every candidate.
    cos_corner = np.cos(np.arctan(tan_half * np.sqrt(2.0)))
    cand = np.nonzero(t >= cos_corner - 1e-12)[0]
    if cand.size == 0:
        return
    tc = t[cand]
    scale = 1.0 / (tc * tan_half)
    u = (vecs[cand] @ east) * scale
    v = (vecs[cand] @ north) * scale
    inside = (np.abs(u) < 1.0) & (np.abs(v) < 1.0)
    idx = cand[inside]
    u = u[inside]
    v = v[inside]
    col = (u + 1.0) * 0.5 * size
    row = (1.0 - v) * 0.5 * size
    val = bilinear_clamp(vimg, col, row).astype(np.float64)
    wgt = (1.0 - np.abs(u)) * (1.0 - np.abs(v))
    # Each equirect pixel appears at most once per call, so fancy-index
    # accumulation is collision-free.
    accum.reshape(h * w, -1)[idx] += wgt[:, None] * val
    weight.reshape(h * w)[idx] += wgt


def overlap_counts(vecs: np.ndarray, frames: np.ndarray, tan_half: float) -> np.ndarray:
    """Count, per direction, the viewports strictly containing it.

    ``frames`` is (m, 3, 3) with rows (east, north, forward) per viewport.
    Returns int64 (n,).
    """
    counts = np.zeros(vecs.shape[0], dtype=np.int64)
    cos_corner = np.cos(np.arctan(tan_half * np.sqrt(2.0)))
    for k in range(frames.shape[0]):
        t = vecs @ frames[k, 2]
        cand = np.nonzero(t >= cos_corner - 1e-12)[0]
        if cand.size == 0:
            continue
        scale = 1.0 / (t[cand] * tan_half)
        u = (vecs[cand] @ frames[k, 0]) * scale
        v = (vecs[cand] @ frames[k, 1]) * scale
        counts[cand[(np.abs(u) < 1.0) & (np.abs(v) < 1.0)]] += 1
    return counts


def edge_widths(
    lum: np.ndarray, rows: np.ndarray, cols: np.ndarray, cap: int
) -> np.ndarray:
    """Measure edge widths by walking to the nearest luminance extrema.

    For each (row, col) edge pixel, traverse left and right along the row
    (cyclic x) while the profile keeps strictly rising/falling; the width
    is the pixel distance between the two extrema. Returns int64 widths,
    -1 where a traversal exhausted ``cap`` steps without an extremum.
    """
    w = lum.shape[1]
    out = np.empty(rows.shape[0], dtype=np.int64)
    for i in range(rows.shape[0]):
        line = lum[rows[i]]
        c = int(cols[i])
        right = line[(c + 1) % w]
        left = line[(c - 1) % w]
        if right == left:
            out[i] = -1
            continue
        sign = 1.0 if right > left else -1.0
        lo = c
        steps = 0
        while steps < cap and sign * line[(lo - 1) % w] < sign * line[lo % w]:
            lo -= 1
            steps += 1
        if steps == cap and sign * line[(lo - 1) % w] < sign * line[lo % w]:
            out[i] = -1
            continue
        hi = c
        steps = 0
        while steps < cap and sign * line[(hi + 1) % w] > sign * line[hi % w]:
            hi += 1
            steps += 1
        if steps == cap and sign * line[(hi + 1) % w] > sign * line[hi % w]:
            out[i] = -1
            continue
        out[i] = hi - lo
    return out
