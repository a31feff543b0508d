"""Rendering viewports from equirect frames and fusing them back.

Rasters are float32 in [0, 1]; all blending arithmetic runs in float64
accumulators. The back-projection gathers into destination pixels (no
scatter), weighting each contribution by the separable tent
(1-|u|)(1-|v|) that vanishes on the viewport border.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels
from .geometry import dir_to_equirect, dir_to_vec, equirect_to_dir
from .tessellation import Viewport

#: Weights below this are treated as "never touched" when finalizing.
WEIGHT_EPS = 1e-8

__all__ = [
    "EquirectImage",
    "ViewportImage",
    "BlendAccumulator",
    "sample_bilinear",
    "render_viewport",
    "backproject_accumulate",
    "finalize_blend",
    "prepare_detector_input",
    "equirect_pixel_dirs",
    "WEIGHT_EPS",
]


def equirect_pixel_dirs(width: int, height: int) -> np.ndarray:
    """Unit direction of every equirect pixel center, row-major (h*w, 3)."""
    xs = np.arange(width, dtype=np.float64) + 0.5
    ys = np.arange(height, dtype=np.float64) + 0.5
    lon, lat = equirect_to_dir(xs[None, :], ys[:, None], width, height)
    return np.ascontiguousarray(dir_to_vec(lon, lat).reshape(-1, 3))


@dataclass
class EquirectImage:
    """A full-sphere frame; columns wrap (column 0 adjoins column w-1)."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels, dtype=np.float32)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ValueError(f"expected (h, w) or (h, w, 1|3) pixels, got {arr.shape}")
        if arr.shape[1] < 2 or arr.shape[0] < 1:
            raise ValueError(f"image must be at least 2x1 pixels, got {arr.shape}")
        self.pixels = np.ascontiguousarray(arr)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    @classmethod
    def full(cls, width: int, height: int, value: float, channels: int = 1):
        return cls(np.full((height, width, channels), value, dtype=np.float32))


@dataclass
class ViewportImage:
    """A square rectilinear rendering of one viewport."""

    viewport: Viewport
    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels, dtype=np.float32)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        s = self.viewport.size
        if arr.shape[0] != s or arr.shape[1] != s:
            raise ValueError(
                f"viewport raster {arr.shape[:2]} does not match size {s}"
            )
        if arr.shape[2] not in (1, 3):
            raise ValueError(f"expected 1 or 3 channels, got {arr.shape[2]}")
        self.pixels = np.ascontiguousarray(arr)

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]


def sample_bilinear(img: EquirectImage, x, y) -> np.ndarray:
    """Bilinear lookup at continuous coords; x wraps the seam, y clamps.

    Returns shape (..., channels) matching the broadcast coordinate shape.
    """
    xs, ys = np.broadcast_arrays(
        np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    )
    vals = kernels.bilinear_wrap(
        img.pixels, np.ascontiguousarray(xs).ravel(), np.ascontiguousarray(ys).ravel()
    )
    return vals.reshape(xs.shape + (img.channels,))


def _viewport_grid(size: int):
    """Normalized plane coords of every viewport pixel center, (size, size)."""
    centers = (np.arange(size, dtype=np.float64) + 0.5) / size
    u = 2.0 * centers - 1.0
    v = 1.0 - 2.0 * centers
    return np.meshgrid(u, v, indexing="xy")


def render_viewport(img: EquirectImage, vp: Viewport) -> ViewportImage:
    """Render one square gnomonic view out of the equirect frame."""
    uu, vv = _viewport_grid(vp.size)
    lon, lat = vp.frame.unproject(uu, vv)
    xs, ys = dir_to_equirect(lon, lat, img.width, img.height)
    vals = kernels.bilinear_wrap(img.pixels, xs.ravel(), ys.ravel())
    return ViewportImage(vp, vals.reshape(vp.size, vp.size, img.channels))


@dataclass
class BlendAccumulator:
    """Paired accumulator / weight rasters for back-projection fusion."""

    accum: np.ndarray
    weight: np.ndarray

    @classmethod
    def create(cls, width: int, height: int, channels: int = 1):
        if width < 2 or height < 1:
            raise ValueError(f"accumulator must be at least 2x1, got {width}x{height}")
        return cls(
            np.zeros((height, width, channels), dtype=np.float64),
            np.zeros((height, width), dtype=np.float64),
        )

    @property
    def height(self) -> int:
        return self.weight.shape[0]

    @property
    def width(self) -> int:
        return self.weight.shape[1]

    @property
    def channels(self) -> int:
        return self.accum.shape[2]

    @cached_property
    def pixel_dirs(self) -> np.ndarray:
        """Unit direction of every pixel center, row-major (h*w, 3)."""
        return equirect_pixel_dirs(self.width, self.height)


def backproject_accumulate(acc: BlendAccumulator, vimg: ViewportImage) -> None:
    """Add one viewport image into the accumulator (in place).

    Every equirect pixel whose direction falls strictly inside the
    viewport footprint gathers a tent-weighted bilinear sample; all other
    pixels are untouched.
    """
    if vimg.channels != acc.channels:
        raise ValueError(
            f"viewport image has {vimg.channels} channels, accumulator {acc.channels}"
        )
    frame = vimg.viewport.frame
    kernels.accumulate_viewport(
        acc.accum,
        acc.weight,
        vimg.pixels,
        frame.as_matrix(),
        frame.tan_half,
        acc.pixel_dirs,
    )


def finalize_blend(
    acc: BlendAccumulator, fallback: float = 0.0
) -> tuple[EquirectImage, int]:
    """Divide accumulated values by weights; fall back where untouched.

    Returns the blended image and the number of fallback pixels.
    """
    covered = acc.weight > WEIGHT_EPS
    out = np.full_like(acc.accum, float(fallback))
    np.divide(acc.accum, acc.weight[:, :, None], out=out, where=covered[:, :, None])
    return EquirectImage(out.astype(np.float32)), int(np.size(covered) - np.count_nonzero(covered))


def _area_reduce_axis(arr: np.ndarray, new_len: int, axis: int) -> np.ndarray:
    """Exact box-filter reduction along one axis (fractional footprints)."""
    a = np.moveaxis(arr, axis, 0)
    old = a.shape[0]
    cum = np.zeros((old + 1,) + a.shape[1:], dtype=np.float64)
    np.cumsum(a, axis=0, out=cum[1:])
    edges = np.arange(new_len + 1, dtype=np.float64) * (old / new_len)
    idx = np.minimum(np.floor(edges).astype(np.int64), old)
    frac = (edges - idx).reshape((-1,) + (1,) * (a.ndim - 1))
    vals = cum[idx] + frac * a[np.minimum(idx, old - 1)]
    out = (vals[1:] - vals[:-1]) * (new_len / old)
    return np.moveaxis(out, 0, axis)


def _linear_expand_axis(arr: np.ndarray, new_len: int, axis: int) -> np.ndarray:
    """Bilinear upsample along one axis at destination pixel centers."""
    a = np.moveaxis(arr, axis, 0)
    old = a.shape[0]
    pos = np.clip((np.arange(new_len) + 0.5) * (old / new_len) - 0.5, 0.0, old - 1.0)
    i0 = np.floor(pos).astype(np.int64)
    i1 = np.minimum(i0 + 1, old - 1)
    frac = (pos - i0).reshape((-1,) + (1,) * (a.ndim - 1))
    out = a[i0] * (1.0 - frac) + a[i1] * frac
    return np.moveaxis(out, 0, axis)


def prepare_detector_input(
    img: EquirectImage, target_w: int, target_h: int
) -> EquirectImage:
    """Resize to a detector's receptive field, preserving 2:1 aspect.

    Shrinking axes use exact area averaging; growing axes use bilinear
    interpolation. The target must keep the 2:1 panorama aspect.
    """
    if target_h < 1 or target_w < 1:
        raise ValueError(f"target size must be positive, got {target_w}x{target_h}")
    if target_w != 2 * target_h:
        raise ValueError(
            f"target must have 2:1 aspect, got {target_w}x{target_h}"
        )
    if target_w == img.width and target_h == img.height:
        return EquirectImage(img.pixels.copy())
    data = img.pixels.astype(np.float64)
    for axis, new_len in ((1, target_w), (0, target_h)):
        old = data.shape[axis]
        if new_len < old:
            data = _area_reduce_axis(data, new_len, axis)
        elif new_len > old:
            data = _linear_expand_axis(data, new_len, axis)
    return EquirectImage(data.astype(np.float32))
