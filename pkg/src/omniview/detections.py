"""Detection boxes on the equirect cylinder and seam-aware fusion.

Boxes are (x, y, bw, bh) in continuous equirect pixels with x in [0, w);
a box crosses the +/-180 degree seam when x + bw > w. Longitude overlap
is therefore computed on the circle, never on the flat unrolling.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .geometry import dir_to_equirect
from .tessellation import Tessellation

__all__ = [
    "Detection",
    "ViewportDetection",
    "cyclic_iou",
    "spherical_nms",
    "lift_detection",
    "rotate_detections",
    "validate_detections",
]


@dataclass(frozen=True)
class Detection:
    """One fused detection in equirect pixel coordinates."""

    class_id: int
    score: float
    x: float
    y: float
    bw: float
    bh: float

    def __post_init__(self):
        if self.class_id < 0:
            raise ValueError(f"class_id must be non-negative, got {self.class_id}")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must be in [0, 1], got {self.score}")
        if self.bw <= 0.0 or self.bh <= 0.0:
            raise ValueError(f"box extents must be positive, got {self.bw}x{self.bh}")


@dataclass(frozen=True)
class ViewportDetection:
    """One raw detector hit in a single viewport's pixel coordinates."""

    viewport_index: int
    class_id: int
    score: float
    x: float
    y: float
    bw: float
    bh: float

    def __post_init__(self):
        if self.class_id < 0:
            raise ValueError(f"class_id must be non-negative, got {self.class_id}")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must be in [0, 1], got {self.score}")
        if self.bw <= 0.0 or self.bh <= 0.0:
            raise ValueError(f"box extents must be positive, got {self.bw}x{self.bh}")


def validate_detections(dets, w: int, h: int | None = None) -> None:
    """Check the whole-image invariants detections must satisfy for (w, h).

    The y-extent check is skipped when the image height is unknown.
    """
    for d in dets:
        if not 0.0 <= d.x < w:
            raise ValueError(f"box x={d.x} outside [0, {w})")
        if d.bw > w:
            raise ValueError(f"box width {d.bw} exceeds image width {w}")
        if h is not None and (d.y < 0.0 or d.y + d.bh > h):
            raise ValueError(f"box y-extent [{d.y}, {d.y + d.bh}] outside [0, {h}]")


def _circular_overlap(xa: float, wa: float, xb: float, wb: float, w: float) -> float:
    """Total intersection length of two arcs [x, x+bw) on a circle of size w."""
    start = (xb - xa) % w
    end = start + wb
    # First piece: the part of B before the wrap point; second: the wrapped rest.
    inter = max(0.0, min(end, w, wa) - start)
    if end > w:
        inter += max(0.0, min(end - w, wa))
    return inter


def cyclic_iou(a: Detection, b: Detection, w: int) -> float:
    """Intersection-over-union with longitude treated as cyclic.

    Equals the plain planar IoU whenever neither box wraps and the pair
    is nearby; symmetric in its arguments.
    """
    # Canonical argument order keeps the modulo arithmetic identical for
    # (a, b) and (b, a), making symmetry exact rather than last-ulp.
    if (b.x, b.bw) < (a.x, a.bw):
        a, b = b, a
    x_inter = _circular_overlap(a.x, a.bw, b.x, b.bw, float(w))
    y_lo = max(a.y, b.y)
    y_hi = min(a.y + a.bh, b.y + b.bh)
    inter = x_inter * max(0.0, y_hi - y_lo)
    if inter == 0.0:
        return 0.0
    union = a.bw * a.bh + b.bw * b.bh - inter
    return inter / union


def spherical_nms(
    dets: list[Detection],
    iou_threshold: float,
    w: int,
    merge: bool = False,
) -> list[Detection]:
    """Greedy per-class non-maximum suppression with cyclic longitude.

    Candidates are visited by descending score (ties: class_id, then input
    order); each kept detection suppresses same-class boxes overlapping it
    beyond ``iou_threshold``. With ``merge=True`` the kept box is replaced
    by the score-weighted mean of its group (cyclic in x) instead of
    discarding the suppressed boxes outright.
    """
    if not 0.0 < iou_threshold < 1.0:
        raise ValueError(f"iou_threshold must be in (0, 1), got {iou_threshold}")
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, dets[i].class_id, i))
    suppressed = [False] * len(dets)
    kept: list[Detection] = []
    for i in order:
        if suppressed[i]:
            continue
        keeper = dets[i]
        group = [keeper]
        for j in order:
            if j == i or suppressed[j] or dets[j].class_id != keeper.class_id:
                continue
            if cyclic_iou(keeper, dets[j], w) > iou_threshold:
                suppressed[j] = True
                group.append(dets[j])
        kept.append(_merge_group(group, w) if merge and len(group) > 1 else keeper)
    return kept


def _merge_group(group: list[Detection], w: int) -> Detection:
    """Score-weighted mean box of a suppression group, cyclic in x."""
    keeper = group[0]
    ref = keeper.x + keeper.bw / 2.0
    weights = np.array([d.score for d in group])
    # Unroll every center to the representative nearest the keeper's.
    centers = np.array([(d.x + d.bw / 2.0 - ref + w / 2.0) % w - w / 2.0 + ref for d in group])
    cx = float(np.average(centers, weights=weights))
    cy = float(np.average([d.y + d.bh / 2.0 for d in group], weights=weights))
    bw = float(np.average([d.bw for d in group], weights=weights))
    bh = float(np.average([d.bh for d in group], weights=weights))
    return replace(keeper, x=(cx - bw / 2.0) % w, y=cy - bh / 2.0, bw=bw, bh=bh)


def rotate_detections(dets, delta_lon: float, w: int):
    """Shift every box east by delta_lon degrees, wrapping at the seam."""
    shift = delta_lon * w / 360.0
    return [replace(d, x=(d.x + shift) % w) for d in dets]


def _min_cyclic_interval(xs: np.ndarray, w: float) -> tuple[float, float]:
    """Smallest arc [start, start+width) covering all cyclic positions."""
    xs = np.sort(xs % w)
    gaps = np.diff(xs, append=xs[0] + w)
    j = int(np.argmax(gaps))
    start = xs[(j + 1) % len(xs)]
    return float(start), float(w - gaps[j])


def lift_detection(
    vd: ViewportDetection, tess: Tessellation, w: int, h: int
) -> Detection:
    """Map a viewport-space box onto the equirect frame.

    The box boundary is tracked through 8 samples (corners plus edge
    midpoints, which bound the bulge the gnomonic-to-equirect mapping
    introduces at high latitude); the result is the minimal cyclic-x /
    plain-y box around them. Boxes that lift to 180 degrees of longitude
    or more are rejected as degenerate.
    """
    if not 0 <= vd.viewport_index < tess.count:
        raise ValueError(
            f"viewport index {vd.viewport_index} outside tessellation of {tess.count}"
        )
    vp = tess.viewports[vd.viewport_index]
    s = float(vp.size)
    px = np.array([vd.x, vd.x + vd.bw / 2.0, vd.x + vd.bw])
    py = np.array([vd.y, vd.y + vd.bh / 2.0, vd.y + vd.bh])
    gx, gy = np.meshgrid(px, py)
    keep = (gx != px[1]) | (gy != py[1])  # 8 boundary points, center dropped
    u = 2.0 * gx[keep] / s - 1.0
    v = 1.0 - 2.0 * gy[keep] / s
    lon, lat = vp.frame.unproject(u, v)
    ex, ey = dir_to_equirect(lon, lat, w, h)
    x0, bw = _min_cyclic_interval(ex, float(w))
    if bw >= w / 2.0:
        raise ValueError(
            f"lifted box spans {bw * 360.0 / w:.1f} degrees of longitude; "
            "boxes of 180 degrees or more are degenerate"
        )
    y0 = float(np.min(ey))
    y1 = float(np.max(ey))
    return Detection(
        class_id=vd.class_id, score=vd.score, x=x0, y=y0, bw=bw, bh=y1 - y0
    )
