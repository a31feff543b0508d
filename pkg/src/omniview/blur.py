"""No-reference global blur from vertical-edge widths, stretch-compensated.

The equirect projection stretches content horizontally by 1/cos(latitude),
so a raw edge width overstates blur away from the equator. Each measured
width is divided by the per-row stretch factor before entering the global
statistic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .projection import EquirectImage

#: Rec.601 luminance weights for RGB input.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)
DEFAULT_GRAD_THRESHOLD = 0.04
DEFAULT_STRETCH_MAX = 100.0
ROW_HISTOGRAM_BINS = 16

__all__ = [
    "DistortionMap",
    "BlurReport",
    "compute_distortion_map",
    "to_luminance",
    "detect_vertical_edges",
    "measure_edge_width",
    "global_blur",
    "DEFAULT_GRAD_THRESHOLD",
    "DEFAULT_STRETCH_MAX",
    "LUMA_WEIGHTS",
]


@dataclass(frozen=True)
class DistortionMap:
    """Per-row horizontal stretch factors of the equirect projection."""

    height: int
    stretch: np.ndarray

    def __post_init__(self):
        if self.stretch.shape != (self.height,):
            raise ValueError("stretch table must have one entry per row")


@dataclass(frozen=True)
class BlurReport:
    """Summary of an edge-width sweep over one image.

    ``global_blur`` is None when no edge survived; ``row_histogram``
    counts accepted edges in equal-height row bands.
    """

    edge_count: int
    discarded_count: int
    global_blur: float | None
    mean_raw_width: float | None
    row_histogram: tuple[int, ...]


def compute_distortion_map(
    h: int, stretch_max: float = DEFAULT_STRETCH_MAX
) -> DistortionMap:
    """Stretch factor 1/cos(latitude) of each row center, capped at stretch_max."""
    if h < 1:
        raise ValueError(f"image height must be positive, got {h}")
    if stretch_max <= 1.0:
        raise ValueError(f"stretch_max must exceed 1, got {stretch_max}")
    lat = 90.0 - (np.arange(h, dtype=np.float64) + 0.5) / h * 180.0
    stretch = np.minimum(1.0 / np.cos(np.radians(lat)), stretch_max)
    return DistortionMap(h, stretch)


def to_luminance(img: EquirectImage) -> np.ndarray:
    """Collapse an image to a (h, w) float32 luminance plane."""
    if img.channels == 1:
        return img.pixels[:, :, 0]
    r, g, b = LUMA_WEIGHTS
    lum = r * img.pixels[:, :, 0] + g * img.pixels[:, :, 1] + b * img.pixels[:, :, 2]
    return np.ascontiguousarray(lum, dtype=np.float32)


def _horizontal_gradient(lum: np.ndarray) -> np.ndarray:
    """Signed 3x3 horizontal-difference response, cyclic in x, clamped in y."""
    diff = (np.roll(lum, -1, axis=1).astype(np.float64) - np.roll(lum, 1, axis=1)) / 6.0
    padded = np.pad(diff, ((1, 1), (0, 0)), mode="edge")
    return padded[:-2] + padded[1:-1] + padded[2:]


def detect_vertical_edges(
    img: EquirectImage | np.ndarray, grad_threshold: float = DEFAULT_GRAD_THRESHOLD
) -> tuple[np.ndarray, np.ndarray]:
    """Locate vertical-edge pixels: strong horizontal gradient, row-wise peak.

    Returns (rows, cols) int64 arrays. The gradient magnitude must exceed
    ``grad_threshold`` and be a local maximum along its row (the trailing
    pixel wins on flat-topped plateaus), both evaluated cyclically in x.
    """
    lum = to_luminance(img) if isinstance(img, EquirectImage) else img
    mag = np.abs(_horizontal_gradient(lum))
    left = np.roll(mag, 1, axis=1)
    right = np.roll(mag, -1, axis=1)
    peak = (mag >= left) & (mag > right) & (mag > grad_threshold)
    rows, cols = np.nonzero(peak)
    return rows.astype(np.int64), cols.astype(np.int64)


def measure_edge_width(img: EquirectImage | np.ndarray, row: int, col: int) -> int | None:
    """Width of one edge: pixel distance between its flanking extrema.

    Walks the row cyclically from the edge pixel while the luminance keeps
    strictly rising/falling on each side. Returns None when a side stays
    monotone for w/4 steps (no extremum within the cap).
    """
    lum = to_luminance(img) if isinstance(img, EquirectImage) else img
    cap = lum.shape[1] // 4
    width = kernels.edge_widths(
        lum, np.array([row], dtype=np.int64), np.array([col], dtype=np.int64), cap
    )[0]
    return None if width < 0 else int(width)


def global_blur(
    img: EquirectImage,
    grad_threshold: float = DEFAULT_GRAD_THRESHOLD,
    stretch_max: float = DEFAULT_STRETCH_MAX,
    compensate: bool = True,
    statistic: str = "mean",
) -> BlurReport:
    """Measure every vertical edge and aggregate into one blur figure.

    With ``compensate`` each width is divided by its row's stretch factor
    before aggregation; ``statistic`` picks mean (default) or median.
    """
    if statistic not in ("mean", "median"):
        raise ValueError(f"statistic must be 'mean' or 'median', got {statistic!r}")
    lum = to_luminance(img)
    h, w = lum.shape
    rows, cols = detect_vertical_edges(lum, grad_threshold)
    widths = kernels.edge_widths(lum, rows, cols, w // 4)
    ok = widths >= 0
    rows, widths = rows[ok], widths[ok].astype(np.float64)
    discarded = int(np.size(ok) - np.count_nonzero(ok))
    hist, _ = np.histogram(rows, bins=ROW_HISTOGRAM_BINS, range=(0, h))
    if widths.size == 0:
        return BlurReport(0, discarded, None, None, tuple(int(v) for v in hist))
    dist = compute_distortion_map(h, stretch_max)
    values = widths / dist.stretch[rows] if compensate else widths
    agg = np.mean if statistic == "mean" else np.median
    return BlurReport(
        edge_count=int(widths.size),
        discarded_count=discarded,
        global_blur=float(agg(values)),
        mean_raw_width=float(np.mean(widths)),
        row_histogram=tuple(int(v) for v in hist),
    )
