"""Directions on the viewing sphere and their pixel-space projections.

Conventions used throughout the package:

* Longitude ``lon`` is in degrees in the half-open range [-180, 180);
  latitude ``lat`` is in degrees in [-90, 90].
* Unit vectors: ``x = cos(lat)*cos(lon)``, ``y = cos(lat)*sin(lon)``,
  ``z = sin(lat)``, so lon 0 / lat 0 maps to (1, 0, 0) and the north
  pole to (0, 0, 1).
* Equirectangular pixel coordinates are continuous: integer pixel ``p``
  samples at ``p + 0.5``. ``x`` is cyclic with period ``w``; ``y`` is
  clamped to [0, h].
* Viewport-plane coordinates ``(u, v)`` are normalized so the viewport
  border sits at ``|u| = 1`` / ``|v| = 1``; +u points east and +v north.

All functions accept scalars or numpy arrays and broadcast; angles are
degrees at every public boundary, radians only inside the trig kernels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SphereDir",
    "ViewportFrame",
    "normalize_dir",
    "wrap_lon",
    "dir_to_vec",
    "vec_to_dir",
    "equirect_to_dir",
    "dir_to_equirect",
    "angular_distance",
]


def wrap_lon(lon):
    """Reduce longitude(s) modulo 360 into [-180, 180)."""
    return ((np.asarray(lon, dtype=np.float64) + 180.0) % 360.0) - 180.0


@dataclass(frozen=True)
class SphereDir:
    """A direction on the viewing sphere, in degrees."""

    lon: float
    lat: float


def normalize_dir(lon: float, lat: float) -> SphereDir:
    """Canonicalize a (lon, lat) pair into a SphereDir.

    Longitude is wrapped into [-180, 180); latitude must already lie in
    [-90, 90] (inputs beyond the poles are rejected, not reflected).
    """
    lat = float(lat)
    if not -90.0 <= lat <= 90.0:
        raise ValueError(f"latitude {lat} outside [-90, 90]")
    return SphereDir(float(wrap_lon(float(lon))), lat)


def dir_to_vec(lon, lat):
    """Convert direction(s) to unit vectors, shape (..., 3)."""
    lo = np.radians(np.asarray(lon, dtype=np.float64))
    la = np.radians(np.asarray(lat, dtype=np.float64))
    cl = np.cos(la)
    return np.stack(
        np.broadcast_arrays(cl * np.cos(lo), cl * np.sin(lo), np.sin(la)), axis=-1
    )


def vec_to_dir(v):
    """Convert vector(s) of shape (..., 3) back to (lon, lat) degrees.

    Vectors are renormalized internally; at the poles lon is defined as 0.
    Zero vectors are rejected.
    """
    v = np.asarray(v, dtype=np.float64)
    norm = np.sqrt(np.sum(v * v, axis=-1))
    if np.any(norm == 0.0):
        raise ValueError("zero vector has no direction")
    x, y, z = v[..., 0] / norm, v[..., 1] / norm, v[..., 2] / norm
    lat = np.degrees(np.arcsin(np.clip(z, -1.0, 1.0)))
    planar = np.hypot(x, y)
    lon = np.where(planar == 0.0, 0.0, np.degrees(np.arctan2(y, x)))
    return wrap_lon(lon), lat


def equirect_to_dir(x, y, w: int, h: int):
    """Map continuous equirect pixel coordinates to (lon, lat) degrees."""
    _check_image_dims(w, h)
    x = np.asarray(x, dtype=np.float64) % w
    y = np.clip(np.asarray(y, dtype=np.float64), 0.0, float(h))
    lon = x / w * 360.0 - 180.0
    lat = 90.0 - y / h * 180.0
    return wrap_lon(lon), lat


def dir_to_equirect(lon, lat, w: int, h: int):
    """Map (lon, lat) degrees to continuous equirect pixel coordinates."""
    _check_image_dims(w, h)
    lon = wrap_lon(lon)
    lat = np.asarray(lat, dtype=np.float64)
    x = (lon + 180.0) / 360.0 * w
    y = (90.0 - lat) / 180.0 * h
    return x % w, y


def angular_distance(lon1, lat1, lon2, lat2):
    """Great-circle angle in degrees, in [0, 180].

    Uses the arctangent of the cross/dot ratio, which stays accurate for
    both tiny and near-antipodal separations where arccos loses digits.
    """
    a = dir_to_vec(lon1, lat1)
    b = dir_to_vec(lon2, lat2)
    cross = np.cross(a, b)
    sin_d = np.sqrt(np.sum(cross * cross, axis=-1))
    cos_d = np.sum(a * b, axis=-1)
    return np.degrees(np.arctan2(sin_d, cos_d))


def _check_image_dims(w: int, h: int) -> None:
    if w < 2 or h < 1:
        raise ValueError(f"equirect geometry needs w >= 2 and h >= 1, got {w}x{h}")


@dataclass(frozen=True)
class ViewportFrame:
    """Orthonormal tangent frame of a square gnomonic viewport.

    ``forward`` points at the viewport center, ``east``/``north`` span the
    tangent plane (north-aligned orientation: +v is increasing latitude).
    ``tan_half`` scales plane offsets so the border maps to |u| = |v| = 1.
    """

    east: np.ndarray
    north: np.ndarray
    forward: np.ndarray
    fov: float
    tan_half: float

    @classmethod
    def for_center(cls, lon: float, lat: float, fov: float) -> "ViewportFrame":
        if not 0.0 < fov < 90.0:
            raise ValueError(f"viewport fov must be in (0, 90) degrees, got {fov}")
        if not -90.0 <= lat <= 90.0:
            raise ValueError(f"latitude {lat} outside [-90, 90]")
        # At the poles lon is undefined; pin the frame to the lon-0 meridian.
        frame_lon = 0.0 if abs(lat) == 90.0 else float(lon)
        lo = np.radians(frame_lon)
        la = np.radians(float(lat))
        forward = np.array(
            [np.cos(la) * np.cos(lo), np.cos(la) * np.sin(lo), np.sin(la)]
        )
        north = np.array(
            [-np.sin(la) * np.cos(lo), -np.sin(la) * np.sin(lo), np.cos(la)]
        )
        east = np.array([-np.sin(lo), np.cos(lo), 0.0])
        return cls(east, north, forward, float(fov), float(np.tan(np.radians(fov) / 2.0)))

    def as_matrix(self) -> np.ndarray:
        """Rows (east, north, forward) as a 3x3 float64 matrix."""
        return np.stack([self.east, self.north, self.forward])

    def project(self, lon, lat):
        """Gnomonic forward projection.

        Returns ``(u, v, in_front)``. ``u``/``v`` are NaN where the
        direction is 90 degrees or more from the center (``in_front``
        False); coordinates outside [-1, 1] mark points beyond the
        viewport border but still on the tangent plane.
        """
        vec = dir_to_vec(lon, lat)
        return self.project_vecs(vec)

    def project_vecs(self, vec):
        """Like :meth:`project` but takes precomputed unit vectors."""
        vec = np.asarray(vec, dtype=np.float64)
        t = vec @ self.forward
        in_front = t > 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = 1.0 / (t * self.tan_half)
            u = (vec @ self.east) * scale
            v = (vec @ self.north) * scale
        u = np.where(in_front, u, np.nan)
        v = np.where(in_front, v, np.nan)
        return u, v, in_front

    def unproject(self, u, v):
        """Gnomonic inverse: viewport-plane coordinates to (lon, lat)."""
        u = np.asarray(u, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        q = (
            self.forward
            + (u * self.tan_half)[..., None] * self.east
            + (v * self.tan_half)[..., None] * self.north
        )
        return vec_to_dir(q)

    def contains(self, lon, lat):
        """Strict-interior containment of direction(s) in the footprint."""
        u, v, in_front = self.project(lon, lat)
        with np.errstate(invalid="ignore"):
            return in_front & (np.abs(u) < 1.0) & (np.abs(v) < 1.0)
