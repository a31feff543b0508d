"""Command-line front end and the end-to-end pipeline stages.

Stages communicate only through files, so renders, lifts, NMS and blends
compose as shell pipelines. Exit codes: 0 success, 2 usage error, 3 I/O
error, 4 validation error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import formats, kernels
from .blur import DEFAULT_GRAD_THRESHOLD, DEFAULT_STRETCH_MAX, global_blur
from .detections import lift_detection, spherical_nms, validate_detections
from .geometry import dir_to_equirect
from .projection import (
    BlendAccumulator,
    ViewportImage,
    backproject_accumulate,
    equirect_pixel_dirs,
    finalize_blend,
    prepare_detector_input,
    render_viewport,
)
from .tessellation import (
    DEFAULT_COUNT,
    DEFAULT_FOV,
    Tessellation,
    make_tessellation,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_VALIDATION = 4

DEFAULT_VIEWPORT_SIZE = 256  # matches 3840-wide sources at the default fov


@dataclass
class PipelineConfig:
    """Defaults shared by the pipeline commands; flags override per run."""

    count: int = DEFAULT_COUNT
    fov: float = DEFAULT_FOV
    size: int = DEFAULT_VIEWPORT_SIZE
    iou_threshold: float = 0.5
    merge: bool = False
    grad_threshold: float = DEFAULT_GRAD_THRESHOLD
    stretch_max: float = DEFAULT_STRETCH_MAX
    jobs: int = 1

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        doc = json.loads(Path(path).read_text())
        if not isinstance(doc, dict):
            raise ValueError(f"{path}: config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ValueError(f"{path}: unknown config keys {unknown}")
        return cls(**doc)


def _config(args) -> PipelineConfig:
    if getattr(args, "config", None):
        return PipelineConfig.from_file(args.config)
    return PipelineConfig()


def _pick(flag_value, config_value):
    return config_value if flag_value is None else flag_value


def _viewport_file(out_dir: Path, index: int, count: int) -> Path:
    digits = max(3, len(str(count - 1)))
    return out_dir / f"viewport_{index:0{digits}d}.png"


def cmd_viewports(args) -> int:
    cfg = _config(args)
    tess = make_tessellation(
        _pick(args.count, cfg.count), _pick(args.fov, cfg.fov), _pick(args.size, cfg.size)
    )
    formats.write_tessellation(args.out, tess)
    return EXIT_OK


def cmd_render(args) -> int:
    cfg = _config(args)
    jobs = max(1, _pick(args.jobs, cfg.jobs))
    img = formats.read_image(args.image)
    if img.width != 2 * img.height:
        print(
            f"warning: {args.image} is {img.width}x{img.height}, not 2:1 equirect",
            file=sys.stderr,
        )
    tess = formats.read_tessellation(args.tessellation)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def render_one(vp):
        vimg = render_viewport(img, vp)
        formats.write_raster(_viewport_file(out_dir, vp.index, tess.count), vimg.pixels)

    if jobs == 1:
        for vp in tess.viewports:
            render_one(vp)
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            list(pool.map(render_one, tess.viewports))
    return EXIT_OK


def cmd_blend(args) -> int:
    tess = formats.read_tessellation(args.tessellation)
    vp_dir = Path(args.viewport_dir)
    rasters = []
    for vp in tess.viewports:
        path = _viewport_file(vp_dir, vp.index, tess.count)
        if not path.exists():
            raise FileNotFoundError(f"missing viewport image {vp.index}: {path}")
        rasters.append(formats.read_raster(path))
    channels = rasters[0].shape[2]
    acc = BlendAccumulator.create(args.width, args.height, channels)
    for vp, raster in zip(tess.viewports, rasters):
        backproject_accumulate(acc, ViewportImage(vp, raster))
    blended, fallback_count = finalize_blend(acc)
    formats.write_image(args.out, blended)
    print(f"fallback_pixels: {fallback_count}")
    return EXIT_OK


def cmd_lift(args) -> int:
    tess = formats.read_tessellation(args.tessellation)
    vdets = formats.read_detections(args.input, viewport=True)
    lifted = [lift_detection(vd, tess, args.width, args.height) for vd in vdets]
    formats.write_detections(args.out, lifted)
    return EXIT_OK


def cmd_nms(args) -> int:
    cfg = _config(args)
    dets = formats.read_detections(args.input)
    validate_detections(dets, args.width, args.height)
    fused = spherical_nms(
        dets, _pick(args.iou_threshold, cfg.iou_threshold), args.width, merge=args.merge
    )
    formats.write_detections(args.out, fused)
    return EXIT_OK


def cmd_blur(args) -> int:
    cfg = _config(args)
    img = formats.read_image(args.image)
    report = global_blur(
        img,
        grad_threshold=_pick(args.grad_threshold, cfg.grad_threshold),
        stretch_max=_pick(args.stretch_max, cfg.stretch_max),
        compensate=not args.no_compensate,
    )
    print(f"edge_count: {report.edge_count}")
    print(f"discarded_count: {report.discarded_count}")
    blur = "n/a" if report.global_blur is None else f"{report.global_blur:.6f}"
    raw = "n/a" if report.mean_raw_width is None else f"{report.mean_raw_width:.6f}"
    print(f"global_blur: {blur}")
    print(f"mean_uncompensated_width: {raw}")
    return EXIT_OK


def cmd_coverage(args) -> int:
    tess = formats.read_tessellation(args.tessellation)
    w, h = args.width, args.height
    vecs = equirect_pixel_dirs(w, h)
    counts = kernels.overlap_counts(vecs, tess.frames_matrix, tess.tan_half).reshape(h, w)
    peak = max(1, int(counts.max()))
    shade = counts.astype(np.float32) / peak
    _draw_viewport_borders(shade, tess, w, h)
    formats.write_raster(args.out, shade[:, :, None])
    print(f"min_overlap: {int(counts.min())}")
    print(f"max_overlap: {int(counts.max())}")
    print(f"coverage_fraction: {float(np.mean(counts >= 1)):.6f}")
    return EXIT_OK


def _draw_viewport_borders(shade, tess: Tessellation, w: int, h: int, samples: int = 512):
    t = np.linspace(-1.0, 1.0, samples)
    ones = np.ones_like(t)
    border_u = np.concatenate([t, t, -ones, ones])
    border_v = np.concatenate([-ones, ones, t, t])
    for vp in tess.viewports:
        lon, lat = vp.frame.unproject(border_u, border_v)
        xs, ys = dir_to_equirect(lon, lat, w, h)
        cols = np.floor(xs).astype(np.int64) % w
        rows = np.clip(np.floor(ys).astype(np.int64), 0, h - 1)
        shade[rows, cols] = 1.0


def cmd_prepare(args) -> int:
    img = formats.read_image(args.image)
    formats.write_image(args.out, prepare_detector_input(img, args.width, args.height))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="omniview",
        description="Viewport-centric and image-centric processing for equirect 360 imagery",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("viewports", help="generate a tessellation file")
    p.add_argument("--count", type=int, default=None, help="number of viewports")
    p.add_argument("--fov", type=float, default=None, help="square field of view, degrees")
    p.add_argument("--size", type=int, default=None, help="viewport raster size, pixels")
    p.add_argument("--config", default=None, help="JSON pipeline config file")
    p.add_argument("-o", "--out", required=True, help="output tessellation file")
    p.set_defaults(func=cmd_viewports)

    p = sub.add_parser("render", help="render every viewport of an equirect image")
    p.add_argument("--image", required=True, help="input equirect PNG")
    p.add_argument("--tessellation", required=True, help="tessellation file")
    p.add_argument("--out-dir", required=True, help="directory for viewport PNGs")
    p.add_argument("--jobs", type=int, default=None, help="render workers")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("blend", help="back-project viewport images into one equirect PNG")
    p.add_argument("--tessellation", required=True)
    p.add_argument("--viewport-dir", required=True, help="directory of viewport PNGs")
    p.add_argument("--width", type=int, required=True, help="output width, pixels")
    p.add_argument("--height", type=int, required=True, help="output height, pixels")
    p.add_argument("-o", "--out", required=True, help="output PNG")
    p.set_defaults(func=cmd_blend)

    p = sub.add_parser("lift", help="lift viewport detections to equirect coordinates")
    p.add_argument("--in", dest="input", required=True, help="viewport detections (JSON lines)")
    p.add_argument("--tessellation", required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("-o", "--out", required=True, help="output detections file")
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("nms", help="fuse detections with cyclic-longitude NMS")
    p.add_argument("--in", dest="input", required=True, help="detections file (JSON lines)")
    p.add_argument("--iou-threshold", type=float, default=None)
    p.add_argument("--merge", action="store_true", help="average suppressed boxes instead of dropping them")
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, default=None, help="enables the y-extent validation")
    p.add_argument("--config", default=None)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_nms)

    p = sub.add_parser("blur", help="measure global blur of an equirect image")
    p.add_argument("--image", required=True)
    p.add_argument("--no-compensate", action="store_true", help="skip the distortion compensation")
    p.add_argument("--grad-threshold", type=float, default=None)
    p.add_argument("--stretch-max", type=float, default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_blur)

    p = sub.add_parser("coverage", help="visualize per-pixel viewport overlap")
    p.add_argument("--tessellation", required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("-o", "--out", required=True, help="output PNG")
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("prepare", help="resize an equirect image for a detector")
    p.add_argument("--image", required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_prepare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
