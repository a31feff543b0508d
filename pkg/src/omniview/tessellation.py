"""Covering sets of square viewports with golden-angle spiral centers."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .geometry import SphereDir, ViewportFrame, dir_to_vec, normalize_dir, wrap_lon
from . import kernels

DEFAULT_COUNT = 240
DEFAULT_FOV = 24.0
#: Equirect source width the default viewport size is matched to.
REFERENCE_SOURCE_WIDTH = 3840

GOLDEN_ANGLE = 360.0 * (1.0 - 1.0 / ((1.0 + np.sqrt(5.0)) / 2.0))

__all__ = [
    "Viewport",
    "Tessellation",
    "vogel_points",
    "make_tessellation",
    "coverage_fraction",
    "viewports_containing",
    "viewport_size_for_source",
    "DEFAULT_COUNT",
    "DEFAULT_FOV",
    "GOLDEN_ANGLE",
]


@dataclass(frozen=True)
class Viewport:
    """One square rectilinear view: center direction, field of view, raster size."""

    center: SphereDir
    fov: float
    size: int
    index: int = 0

    def __post_init__(self):
        if not 0.0 < self.fov < 90.0:
            raise ValueError(f"viewport fov must be in (0, 90) degrees, got {self.fov}")
        if self.size < 2:
            raise ValueError(f"viewport size must be >= 2 pixels, got {self.size}")

    @cached_property
    def frame(self) -> ViewportFrame:
        return ViewportFrame.for_center(self.center.lon, self.center.lat, self.fov)


@dataclass(frozen=True)
class Tessellation:
    """An ordered, immutable set of identically-sized viewports."""

    viewports: tuple[Viewport, ...]
    fov: float
    count: int = field(default=0)

    def __post_init__(self):
        if self.count == 0:
            object.__setattr__(self, "count", len(self.viewports))
        if self.count != len(self.viewports):
            raise ValueError("tessellation count does not match its viewport list")
        for i, vp in enumerate(self.viewports):
            if vp.index != i:
                raise ValueError(f"viewport at position {i} carries index {vp.index}")

    @cached_property
    def frames_matrix(self) -> np.ndarray:
        """(count, 3, 3) array of (east, north, forward) rows per viewport."""
        return np.stack([vp.frame.as_matrix() for vp in self.viewports])

    @cached_property
    def tan_half(self) -> float:
        return float(np.tan(np.radians(self.fov) / 2.0))


def vogel_points(n: int):
    """Golden-angle spiral points, approximately uniform on the sphere.

    Returns (lon, lat) float64 arrays of length n, in degrees. The k-th
    point sits at z = 1 - (2k+1)/n, longitude k times the golden angle;
    the half-step offset keeps points off the poles. Deterministic.
    """
    if n < 1:
        raise ValueError(f"need at least one point, got n={n}")
    k = np.arange(n, dtype=np.float64)
    z = 1.0 - (2.0 * k + 1.0) / n
    lat = np.degrees(np.arcsin(z))
    lon = wrap_lon(k * GOLDEN_ANGLE)
    return lon, lat


def make_tessellation(count: int, fov: float, size: int) -> Tessellation:
    """Build `count` identical square viewports at the Vogel centers."""
    lons, lats = vogel_points(count)
    viewports = tuple(
        Viewport(normalize_dir(lons[i], lats[i]), float(fov), int(size), index=i)
        for i in range(count)
    )
    return Tessellation(viewports, float(fov), count)


def viewport_size_for_source(fov: float, source_width: int) -> int:
    """Raster size matching the source pixel density at the viewport center."""
    return int(round(fov * source_width / 360.0))


def coverage_fraction(tess: Tessellation, samples: int) -> float:
    """Fraction of `samples` Vogel-generated test directions inside >= 1 viewport."""
    if samples < 1:
        raise ValueError(f"need at least one sample, got {samples}")
    lons, lats = vogel_points(samples)
    vecs = dir_to_vec(lons, lats)
    counts = kernels.overlap_counts(vecs, tess.frames_matrix, tess.tan_half)
    return float(np.mean(counts >= 1))


def viewports_containing(tess: Tessellation, d: SphereDir) -> list[int]:
    """Ascending indices of viewports whose footprint strictly contains d."""
    vec = dir_to_vec(d.lon, d.lat).reshape(1, 3)
    frames = tess.frames_matrix
    t = frames[:, 2] @ vec[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = 1.0 / (t * tess.tan_half)
        u = (frames[:, 0] @ vec[0]) * scale
        v = (frames[:, 1] @ vec[0]) * scale
    inside = (t > 0.0) & (np.abs(u) < 1.0) & (np.abs(v) < 1.0)
    return [int(i) for i in np.nonzero(inside)[0]]
