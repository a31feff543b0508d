import numpy as np
import pytest

import omniview as ov
from omniview import kernels


def psnr(a, b):
    """Peak signal-to-noise ratio in dB for [0, 1] data."""
    mse = np.mean((np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)) ** 2)
    return np.inf if mse == 0.0 else 10.0 * np.log10(1.0 / mse)


def smooth_sphere_image(width, height, channels=1):
    """A gentle band-limited pattern defined on the sphere (seamless)."""
    xs = np.arange(width, dtype=np.float64) + 0.5
    ys = np.arange(height, dtype=np.float64) + 0.5
    lon, lat = ov.equirect_to_dir(xs[None, :], ys[:, None], width, height)
    lo, la = np.radians(lon), np.radians(lat)
    planes = []
    for phase in range(channels):
        p = phase * 2.0
        planes.append(
            0.5
            + 0.2 * np.sin(2.0 * lo + p) * np.cos(la)
            + 0.15 * np.cos(3.0 * la + p)
            + 0.1 * np.sin(lo + 2.0 * la) * np.cos(la)
        )
    return ov.EquirectImage(np.stack(planes, axis=-1).astype(np.float32))


@pytest.fixture(scope="session")
def warm_kernels():
    """Trigger JIT compilation so timed sections measure steady state."""
    img = np.zeros((4, 8, 1), dtype=np.float32)
    xs = np.array([1.0, 5.0])
    ys = np.array([1.0, 2.0])
    kernels.bilinear_wrap(img, xs, ys)
    kernels.bilinear_clamp(img, xs, ys)
    tess = ov.make_tessellation(2, 24.0, 4)
    acc = ov.BlendAccumulator.create(8, 4, 1)
    ov.backproject_accumulate(acc, ov.render_viewport(ov.EquirectImage(img), tess.viewports[0]))
    vecs = acc.pixel_dirs
    kernels.overlap_counts(vecs, tess.frames_matrix, tess.tan_half)
    kernels.edge_widths(
        img[:, :, 0], np.array([0], dtype=np.int64), np.array([2], dtype=np.int64), 2
    )
    return True
