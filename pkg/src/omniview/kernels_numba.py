"""Numba-compiled raster kernels; the default backend.

Scalar-loop twins of ``kernels_numpy`` with identical signatures and
per-pixel arithmetic. All kernels are nopython, nogil, and disk-cached so
repeated sessions skip compilation.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _bilinear_wrap_into(img, xs, ys, out):
    h, w, c = img.shape
    for i in range(xs.shape[0]):
        fx = xs[i] - 0.5
        fy = ys[i] - 0.5
        if fy < 0.0:
            fy = 0.0
        elif fy > h - 1.0:
            fy = h - 1.0
        x0 = int(math.floor(fx))
        y0 = int(math.floor(fy))
        ax = fx - x0
        ay = fy - y0
        x0w = x0 % w
        x1w = (x0 + 1) % w
        y0c = min(max(y0, 0), h - 1)
        y1c = min(y0 + 1, h - 1)
        for ch in range(c):
            top = img[y0c, x0w, ch] * (1.0 - ax) + img[y0c, x1w, ch] * ax
            bot = img[y1c, x0w, ch] * (1.0 - ax) + img[y1c, x1w, ch] * ax
            out[i, ch] = top * (1.0 - ay) + bot * ay


def bilinear_wrap(img, xs, ys):
    out = np.empty((xs.shape[0], img.shape[2]), dtype=np.float32)
    _bilinear_wrap_into(img, np.ascontiguousarray(xs), np.ascontiguousarray(ys), out)
    return out


@njit(cache=True, nogil=True)
def _bilinear_clamp_into(img, xs, ys, out):
    h, w, c = img.shape
    for i in range(xs.shape[0]):
        fx = xs[i] - 0.5
        fy = ys[i] - 0.5
        if fx < 0.0:
            fx = 0.0
        elif fx > w - 1.0:
            fx = w - 1.0
        if fy < 0.0:
            fy = 0.0
        elif fy > h - 1.0:
            fy = h - 1.0
        x0 = int(math.floor(fx))
        y0 = int(math.floor(fy))
        ax = fx - x0
        ay = fy - y0
        x1 = min(x0 + 1, w - 1)
        y1 = min(y0 + 1, h - 1)
        for ch in range(c):
            top = img[y0, x0, ch] * (1.0 - ax) + img[y0, x1, ch] * ax
            bot = img[y1, x0, ch] * (1.0 - ax) + img[y1, x1, ch] * ax
            out[i, ch] = top * (1.0 - ay) + bot * ay


def bilinear_clamp(img, xs, ys):
    out = np.empty((xs.shape[0], img.shape[2]), dtype=np.float32)
    _bilinear_clamp_into(img, np.ascontiguousarray(xs), np.ascontiguousarray(ys), out)
    return out


@njit(cache=True, nogil=True)
def _accumulate_viewport(accum, weight, vimg, frame, tan_half, vecs):
    h, w = weight.shape
    size = vimg.shape[0]
    c = vimg.shape[2]
    e0, e1, e2 = frame[0, 0], frame[0, 1], frame[0, 2]
    n0, n1, n2 = frame[1, 0], frame[1, 1], frame[1, 2]
    f0, f1, f2 = frame[2, 0], frame[2, 1], frame[2, 2]
    cos_corner = math.cos(math.atan(tan_half * math.sqrt(2.0))) - 1e-12
    for p in range(vecs.shape[0]):
        x, y, z = vecs[p, 0], vecs[p, 1], vecs[p, 2]
        t = x * f0 + y * f1 + z * f2
        if t < cos_corner:
            continue
        scale = 1.0 / (t * tan_half)
        u = (x * e0 + y * e1 + z * e2) * scale
        if u <= -1.0 or u >= 1.0:
            continue
        v = (x * n0 + y * n1 + z * n2) * scale
        if v <= -1.0 or v >= 1.0:
            continue
        col = (u + 1.0) * 0.5 * size - 0.5
        row = (1.0 - v) * 0.5 * size - 0.5
        if col < 0.0:
            col = 0.0
        elif col > size - 1.0:
            col = size - 1.0
        if row < 0.0:
            row = 0.0
        elif row > size - 1.0:
            row = size - 1.0
        x0 = int(math.floor(col))
        y0 = int(math.floor(row))
        ax = col - x0
        ay = row - y0
        x1 = min(x0 + 1, size - 1)
        y1 = min(y0 + 1, size - 1)
        wgt = (1.0 - abs(u)) * (1.0 - abs(v))
        r = p // w
        q = p % w
        for ch in range(c):
            top = vimg[y0, x0, ch] * (1.0 - ax) + vimg[y0, x1, ch] * ax
            bot = vimg[y1, x0, ch] * (1.0 - ax) + vimg[y1, x1, ch] * ax
            val = np.float32(top * (1.0 - ay) + bot * ay)
            accum[r, q, ch] += wgt * val
        weight[r, q] += wgt


def accumulate_viewport(accum, weight, vimg, frame, tan_half, vecs):
    _accumulate_viewport(accum, weight, vimg, frame, float(tan_half), vecs)


@njit(cache=True, nogil=True)
def overlap_counts(vecs, frames, tan_half):
    n = vecs.shape[0]
    m = frames.shape[0]
    counts = np.zeros(n, dtype=np.int64)
    cos_corner = math.cos(math.atan(tan_half * math.sqrt(2.0))) - 1e-12
    for p in range(n):
        x, y, z = vecs[p, 0], vecs[p, 1], vecs[p, 2]
        for k in range(m):
            t = x * frames[k, 2, 0] + y * frames[k, 2, 1] + z * frames[k, 2, 2]
            if t < cos_corner:
                continue
            scale = 1.0 / (t * tan_half)
            u = (x * frames[k, 0, 0] + y * frames[k, 0, 1] + z * frames[k, 0, 2]) * scale
            if u <= -1.0 or u >= 1.0:
                continue
            v = (x * frames[k, 1, 0] + y * frames[k, 1, 1] + z * frames[k, 1, 2]) * scale
            if v <= -1.0 or v >= 1.0:
                continue
            counts[p] += 1
    return counts


@njit(cache=True, nogil=True)
def edge_widths(lum, rows, cols, cap):
    w = lum.shape[1]
    out = np.empty(rows.shape[0], dtype=np.int64)
    for i in range(rows.shape[0]):
        r = rows[i]
        c = int(cols[i])
        right = lum[r, (c + 1) % w]
        left = lum[r, (c - 1) % w]
        if right == left:
            out[i] = -1
            continue
        sign = 1.0 if right > left else -1.0
        lo = c
        steps = 0
        while steps < cap and sign * lum[r, (lo - 1) % w] < sign * lum[r, lo % w]:
            lo -= 1
            steps += 1
        if steps == cap and sign * lum[r, (lo - 1) % w] < sign * lum[r, lo % w]:
            out[i] = -1
            continue
        hi = c
        steps = 0
        while steps < cap and sign * lum[r, (hi + 1) % w] > sign * lum[r, hi % w]:
            hi += 1
            steps += 1
        if steps == cap and sign * lum[r, (hi + 1) % w] > sign * lum[r, hi % w]:
            out[i] = -1
            continue
        out[i] = hi - lo
    return out
