"""Backend selection for the hot raster kernels.

The environment variable ``OMNIVIEW_BACKEND`` picks the implementation:

* ``auto`` (default) — numba if it imports, else pure numpy
* ``numba``          — require the compiled kernels
* ``numpy``          — force the pure-numpy fallback

``benchmarks/compare_backends.py`` times the two implementations against
each other; both are importable directly regardless of this switch.
"""

from __future__ import annotations

import os

_choice = os.environ.get("OMNIVIEW_BACKEND", "auto").strip().lower()

if _choice not in ("auto", "numba", "numpy"):
    raise ValueError(
        f"OMNIVIEW_BACKEND={_choice!r} not recognized (use auto, numba, or numpy)"
    )

if _choice == "numpy":
    from . import kernels_numpy as _impl

    BACKEND = "numpy"
else:
    try:
        from . import kernels_numba as _impl

        BACKEND = "numba"
    except ImportError:
        if _choice == "numba":
            raise
        from . import kernels_numpy as _impl

        BACKEND = "numpy"

bilinear_wrap = _impl.bilinear_wrap
bilinear_clamp = _impl.bilinear_clamp
accumulate_viewport = _impl.accumulate_viewport
overlap_counts = _impl.overlap_counts
edge_widths = _impl.edge_widths

__all__ = [
    "BACKEND",
    "bilinear_wrap",
    "bilinear_clamp",
    "accumulate_viewport",
    "overlap_counts",
    "edge_widths",
]
