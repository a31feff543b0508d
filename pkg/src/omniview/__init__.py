"""Adapting conventional computer-vision processing to equirectangular imagery.

Viewport-centric tools: tessellate the sphere into overlapping square
gnomonic viewports, render them from an equirect frame, and fuse
per-viewport results back (accumulator blending for images, cyclic NMS
for detections). Image-centric tools: seam-aware operators on the whole
frame, such as the distortion-compensated blur measure.
"""

from .geometry import (
    SphereDir,
    ViewportFrame,
    angular_distance,
    dir_to_equirect,
    dir_to_vec,
    equirect_to_dir,
    normalize_dir,
    vec_to_dir,
    wrap_lon,
)
from .tessellation import (
    Tessellation,
    Viewport,
    coverage_fraction,
    make_tessellation,
    viewport_size_for_source,
    viewports_containing,
    vogel_points,
)
from .projection import (
    BlendAccumulator,
    EquirectImage,
    ViewportImage,
    backproject_accumulate,
    finalize_blend,
    prepare_detector_input,
    render_viewport,
    sample_bilinear,
)
from .detections import (
    Detection,
    ViewportDetection,
    cyclic_iou,
    lift_detection,
    rotate_detections,
    spherical_nms,
)
from .blur import (
    BlurReport,
    DistortionMap,
    compute_distortion_map,
    detect_vertical_edges,
    global_blur,
    measure_edge_width,
)
from .kernels import BACKEND

__version__ = "0.1.0"
