"""File formats spoken by the CLI: PNG rasters, tessellation and detection files.

Tessellations are a single versioned JSON document; detections are JSON
lines so external detectors can emit them with one print per box. Rasters
are 8-bit PNG with a linear value mapping (no gamma), quantized by
round-half-up.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .detections import Detection, ViewportDetection
from .projection import EquirectImage
from .tessellation import Tessellation, Viewport
from .geometry import normalize_dir

TESSELLATION_FORMAT_VERSION = 1

__all__ = [
    "read_image",
    "write_image",
    "read_raster",
    "write_raster",
    "read_tessellation",
    "write_tessellation",
    "read_detections",
    "write_detections",
    "TESSELLATION_FORMAT_VERSION",
]


def read_raster(path) -> np.ndarray:
    """Load a PNG as float32 (h, w, 1|3) in [0, 1]; non-gray modes become RGB."""
    with Image.open(path) as im:
        if im.mode != "L" and im.mode != "RGB":
            im = im.convert("L") if im.mode in ("1", "I", "I;16") else im.convert("RGB")
        arr = np.asarray(im, dtype=np.float32) / 255.0
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return arr


def write_raster(path, pixels: np.ndarray) -> None:
    """Write float pixels in [0, 1] as 8-bit PNG (round-half-up)."""
    q = np.clip(np.floor(pixels * 255.0 + 0.5), 0.0, 255.0).astype(np.uint8)
    if q.shape[2] == 1:
        Image.fromarray(q[:, :, 0], mode="L").save(path, format="PNG")
    else:
        Image.fromarray(q, mode="RGB").save(path, format="PNG")


def read_image(path) -> EquirectImage:
    return EquirectImage(read_raster(path))


def write_image(path, img: EquirectImage) -> None:
    write_raster(path, img.pixels)


def write_tessellation(path, tess: Tessellation) -> None:
    doc = {
        "format_version": TESSELLATION_FORMAT_VERSION,
        "count": tess.count,
        "fov": tess.fov,
        "size": tess.viewports[0].size,
        "viewports": [
            {"index": vp.index, "lon": vp.center.lon, "lat": vp.center.lat}
            for vp in tess.viewports
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def read_tessellation(path) -> Tessellation:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not a valid tessellation file: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: tessellation document must be a JSON object")
    expected = {"format_version", "count", "fov", "size", "viewports"}
    if set(doc) != expected:
        raise ValueError(
            f"{path}: tessellation keys {sorted(doc)} do not match {sorted(expected)}"
        )
    if doc["format_version"] != TESSELLATION_FORMAT_VERSION:
        raise ValueError(
            f"{path}: unsupported tessellation format version {doc['format_version']}"
        )
    records = doc["viewports"]
    if len(records) != doc["count"]:
        raise ValueError(
            f"{path}: header count {doc['count']} != {len(records)} viewport records"
        )
    viewports = []
    for i, rec in enumerate(records):
        if set(rec) != {"index", "lon", "lat"}:
            raise ValueError(f"{path}: viewport record {i} has keys {sorted(rec)}")
        if rec["index"] != i:
            raise ValueError(f"{path}: viewport record {i} carries index {rec['index']}")
        viewports.append(
            Viewport(
                normalize_dir(float(rec["lon"]), float(rec["lat"])),
                float(doc["fov"]),
                int(doc["size"]),
                index=i,
            )
        )
    return Tessellation(tuple(viewports), float(doc["fov"]), doc["count"])


_DETECTION_FIELDS = ("class_id", "score", "x", "y", "bw", "bh")


def write_detections(path, dets) -> None:
    """One JSON object per line; viewport detections carry viewport_index."""
    lines = []
    for d in dets:
        rec = {}
        if isinstance(d, ViewportDetection):
            rec["viewport_index"] = d.viewport_index
        rec["class_id"] = d.class_id
        rec["score"] = d.score
        for f in ("x", "y", "bw", "bh"):
            rec[f] = getattr(d, f)
        lines.append(json.dumps(rec))
    Path(path).write_text("".join(line + "\n" for line in lines))


def read_detections(path, viewport: bool = False):
    """Parse a JSON-lines detection file; extra keys are tolerated.

    With ``viewport=True`` every record must carry ``viewport_index`` and
    ViewportDetection objects are returned.
    """
    out = []
    for n, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}:{n}: not valid JSON: {exc}") from exc
        missing = [f for f in _DETECTION_FIELDS if f not in rec]
        if viewport and "viewport_index" not in rec:
            missing.append("viewport_index")
        if missing:
            raise ValueError(f"{path}:{n}: missing fields {missing}")
        try:
            if viewport:
                out.append(
                    ViewportDetection(
                        viewport_index=int(rec["viewport_index"]),
                        class_id=int(rec["class_id"]),
                        score=float(rec["score"]),
                        x=float(rec["x"]),
                        y=float(rec["y"]),
                        bw=float(rec["bw"]),
                        bh=float(rec["bh"]),
                    )
                )
            else:
                out.append(
                    Detection(
                        class_id=int(rec["class_id"]),
                        score=float(rec["score"]),
                        x=float(rec["x"]),
                        y=float(rec["y"]),
                        bw=float(rec["bw"]),
                        bh=float(rec["bh"]),
                    )
                )
        except ValueError as exc:
            raise ValueError(f"{path}:{n}: {exc}") from exc
    return out
