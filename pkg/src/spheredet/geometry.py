"""Core spherical geometry: angular types, box-local frames, and the
gnomonic (perspective) projection.

Conventions used throughout the package:

* Angles are degrees at every public interface. Latitude ``theta`` runs
  from -90 (south pole) to +90 (north pole); longitude ``phi`` is
  normalized into ``(-180, +180]``.
* A spherical bounding box ``(theta, phi, fov_x, fov_y)`` covers the
  region ``{|theta'| <= fov_y/2, |phi'| <= fov_x/2}`` expressed in the
  box-local frame obtained by rotating the box center to ``(0, 0)``.
* The unit-sphere embedding is ``(cos(theta)cos(phi), cos(theta)sin(phi),
  sin(theta))``, so the tangent plane at ``(0, 0)`` touches ``x = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BehindPlane

__all__ = [
    "LatLon",
    "TangentCoord",
    "SphericalBox",
    "ErpGeometry",
    "wrap_longitude",
    "angular_distance",
    "rotate_to_box_frame",
    "rotate_from_box_frame",
    "forward_gnomonic",
    "inverse_gnomonic",
    "point_in_box",
    "points_in_box",
    "box_boundary_points",
]

_POLE_RHO_EPS = 1e-12


def wrap_longitude(phi):
    """Normalize longitude(s) in degrees into ``(-180, +180]``.

    Accepts scalars or numpy arrays. The same formula also yields the
    shorter signed arc when applied to a longitude difference.
    """
    return 180.0 - (180.0 - phi) % 360.0


@dataclass(frozen=True)
class LatLon:
    """A point on the sphere, latitude/longitude in degrees."""

    theta: float
    phi: float

    def __post_init__(self):
        if not -90.0 <= self.theta <= 90.0:
            raise ValueError(f"latitude {self.theta} outside [-90, 90]")
        object.__setattr__(self, "phi", float(wrap_longitude(self.phi)))
        object.__setattr__(self, "theta", float(self.theta))


@dataclass(frozen=True)
class TangentCoord:
    """A point on the unit-focal tangent plane; origin is the tangency point."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("tangent coordinates must be finite")


@dataclass(frozen=True)
class SphericalBox:
    """Viewpoint-centered spherical bounding box.

    ``fov_x`` is the left-right and ``fov_y`` the up-down field-of-view
    angle in degrees. The covered region is a latitude-longitude patch in
    the box-local rotated frame (see module docstring), which makes the
    closed-form area ``2 * fov_x * sin(fov_y / 2)`` exact.
    """

    center: LatLon
    fov_x: float
    fov_y: float

    def __post_init__(self):
        if not 0.0 < self.fov_x <= 360.0:
            raise ValueError(f"fov_x {self.fov_x} outside (0, 360]")
        if not 0.0 < self.fov_y <= 180.0:
            raise ValueError(f"fov_y {self.fov_y} outside (0, 180]")

    @classmethod
    def of(cls, theta, phi, fov_x, fov_y) -> "SphericalBox":
        """Build a box from four bare angles (degrees)."""
        return cls(LatLon(theta, phi), float(fov_x), float(fov_y))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.center.theta, self.center.phi, self.fov_x, self.fov_y)


@dataclass(frozen=True)
class ErpGeometry:
    """Equirectangular raster dimensions and per-pixel angular sizes.

    Pixel ``(row i, col j)`` is centered at
    ``theta = 90 - (i + 0.5) * dtheta`` and ``phi = -180 + (j + 0.5) * dphi``,
    i.e. row 0 is the northernmost row and column 0 starts just east of
    the -180 seam.
    """

    height: int
    width: int

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise ValueError("ERP dimensions must be >= 1")

    @property
    def dtheta(self) -> float:
        return 180.0 / self.height

    @property
    def dphi(self) -> float:
        return 360.0 / self.width

    def pixel_center(self, i, j) -> LatLon:
        return LatLon(90.0 - (i + 0.5) * self.dtheta, -180.0 + (j + 0.5) * self.dphi)

    def row_latitudes(self) -> np.ndarray:
        return 90.0 - (np.arange(self.height) + 0.5) * self.dtheta

    def col_longitudes(self) -> np.ndarray:
        return -180.0 + (np.arange(self.width) + 0.5) * self.dphi

    def to_fractional_pixel(self, theta, phi):
        """Map angles (degrees) to fractional (row, col) pixel coordinates.

        Longitude is wrapped first; the caller handles horizontal wrap of
        the resulting column index.
        """
        row = (90.0 - theta) / self.dtheta - 0.5
        col = (wrap_longitude(phi) + 180.0) / self.dphi - 0.5
        return row, col


def _unit_vector(theta_deg, phi_deg):
    """Unit vector(s) for latitude/longitude in degrees; shape (..., 3)."""
    t = np.radians(theta_deg)
    p = np.radians(phi_deg)
    ct = np.cos(t)
    return np.stack([ct * np.cos(p), ct * np.sin(p), np.sin(t)], axis=-1)


def frame_rotation(center: LatLon) -> np.ndarray:
    """3x3 rotation taking `center` to (0, 0).

    Composite of a rotation about the polar axis by -center.phi followed
    by a rotation about the resulting y axis that zeroes the latitude.
    """
    pc = math.radians(center.phi)
    tc = math.radians(center.theta)
    cp, sp = math.cos(pc), math.sin(pc)
    ct, st = math.cos(tc), math.sin(tc)
    rz = np.array([[cp, sp, 0.0], [-sp, cp, 0.0], [0.0, 0.0, 1.0]])
    ry = np.array([[ct, 0.0, st], [0.0, 1.0, 0.0], [-st, 0.0, ct]])
    return ry @ rz


def rotate_to_box_frame(center: LatLon, point: LatLon) -> LatLon:
    """Coordinates of `point` in the frame where `center` sits at (0, 0).

    The composite is an exact rotation, so angular distances are
    preserved and ``rotate_to_box_frame(c, c) == (0, 0)``.
    """
    v = frame_rotation(center) @ _unit_vector(point.theta, point.phi)
    theta = math.degrees(math.asin(max(-1.0, min(1.0, v[2]))))
    phi = math.degrees(math.atan2(v[1], v[0]))
    return LatLon(theta, phi)


def rotate_from_box_frame(center: LatLon, local: LatLon) -> LatLon:
    """Inverse of :func:`rotate_to_box_frame`."""
    v = frame_rotation(center).T @ _unit_vector(local.theta, local.phi)
    theta = math.degrees(math.asin(max(-1.0, min(1.0, v[2]))))
    phi = math.degrees(math.atan2(v[1], v[0]))
    return LatLon(theta, phi)


def angular_distance(a: LatLon, b: LatLon) -> float:
    """Great-circle distance in degrees (haversine form, stable for small arcs)."""
    sdt = math.sin(math.radians(a.theta - b.theta) / 2.0)
    sdp = math.sin(math.radians(a.phi - b.phi) / 2.0)
    cc = math.cos(math.radians(a.theta)) * math.cos(math.radians(b.theta))
    s = math.sqrt(min(1.0, sdt * sdt + cc * sdp * sdp))
    return math.degrees(2.0 * math.asin(s))


def forward_gnomonic(center: LatLon, point: LatLon) -> TangentCoord:
    """Project `point` onto the unit-focal tangent plane at `center`.

    Raises :class:`BehindPlane` when the angular distance between the
    two is 90 degrees or more (the projection denominator vanishes or
    turns negative).
    """
    tc = math.radians(center.theta)
    t = math.radians(point.theta)
    dp = math.radians(point.phi - center.phi)
    denom = math.sin(tc) * math.sin(t) + math.cos(tc) * math.cos(t) * math.cos(dp)
    if denom <= 0.0:
        raise BehindPlane(
            f"point {point.theta, point.phi} is >= 90 deg from center "
            f"{center.theta, center.phi}"
        )
    x = math.cos(t) * math.sin(dp) / denom
    y = (math.cos(tc) * math.sin(t) - math.sin(tc) * math.cos(t) * math.cos(dp)) / denom
    return TangentCoord(x, y)


def inverse_gnomonic(center: LatLon, t: TangentCoord) -> LatLon:
    """Map a tangent-plane point back to the sphere.

    Total on finite inputs: every finite tangent point corresponds to a
    point on the front hemisphere. The longitude term uses a two-argument
    arctangent so the result stays correct past the poles, and the
    ``rho -> 0`` limit returns `center` exactly.
    """
    rho = math.hypot(t.x, t.y)
    if rho < _POLE_RHO_EPS:
        return center
    nu = math.atan(rho)
    tc = math.radians(center.theta)
    sin_nu, cos_nu = math.sin(nu), math.cos(nu)
    arg = cos_nu * math.sin(tc) + t.y * sin_nu * math.cos(tc) / rho
    theta = math.degrees(math.asin(max(-1.0, min(1.0, arg))))
    phi = center.phi + math.degrees(
        math.atan2(t.x * sin_nu, rho * math.cos(tc) * cos_nu - t.y * math.sin(tc) * sin_nu)
    )
    return LatLon(theta, wrap_longitude(phi))


def inverse_gnomonic_arrays(center: LatLon, x, y):
    """Vectorized :func:`inverse_gnomonic`; returns (theta, phi) degree arrays."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    rho = np.hypot(x, y)
    safe_rho = np.where(rho < _POLE_RHO_EPS, 1.0, rho)
    nu = np.arctan(rho)
    sin_nu, cos_nu = np.sin(nu), np.cos(nu)
    tc = math.radians(center.theta)
    st, ct = math.sin(tc), math.cos(tc)
    arg = np.clip(cos_nu * st + y * sin_nu * ct / safe_rho, -1.0, 1.0)
    theta = np.degrees(np.arcsin(arg))
    phi = center.phi + np.degrees(np.arctan2(x * sin_nu, rho * ct * cos_nu - y * st * sin_nu))
    small = rho < _POLE_RHO_EPS
    theta = np.where(small, center.theta, theta)
    phi = np.where(small, center.phi, phi)
    return theta, wrap_longitude(phi)


def forward_gnomonic_arrays(center: LatLon, theta, phi):
    """Vectorized forward projection.

    Returns ``(x, y, valid)`` where `valid` marks points strictly in
    front of the tangent plane; x/y are zero-filled where invalid.
    """
    theta = np.asarray(theta, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    tc = math.radians(center.theta)
    st, ct = math.sin(tc), math.cos(tc)
    t = np.radians(theta)
    dp = np.radians(phi - center.phi)
    cos_t = np.cos(t)
    sin_t = np.sin(t)
    cos_dp = np.cos(dp)
    denom = st * sin_t + ct * cos_t * cos_dp
    valid = denom > 0.0
    safe = np.where(valid, denom, 1.0)
    x = np.where(valid, cos_t * np.sin(dp) / safe, 0.0)
    y = np.where(valid, (ct * sin_t - st * cos_t * cos_dp) / safe, 0.0)
    return x, y, valid


def point_in_box(box: SphericalBox, point: LatLon) -> bool:
    """Membership test in the box-local rotated frame."""
    local = rotate_to_box_frame(box.center, point)
    return (
        abs(local.theta) <= box.fov_y / 2.0
        and abs(wrap_longitude(local.phi)) <= box.fov_x / 2.0
    )


def points_in_box(box: SphericalBox, theta, phi) -> np.ndarray:
    """Vectorized membership for degree arrays of equal shape.

    Algebraically equivalent to rotating each point into the box frame
    and comparing angles: with rotated components (x', y', z'), the
    latitude bound is ``|z'| <= sin(fov_y/2)`` and the longitude bound is
    ``x' >= hypot(x', y') * cos(fov_x/2)``.
    """
    r = frame_rotation(box.center)
    t = np.radians(np.asarray(theta, dtype=np.float64))
    p = np.radians(np.asarray(phi, dtype=np.float64))
    ct = np.cos(t)
    vx = ct * np.cos(p)
    vy = ct * np.sin(p)
    vz = np.sin(t)
    zr = r[2, 0] * vx + r[2, 1] * vy + r[2, 2] * vz
    lat_ok = np.abs(zr) <= math.sin(math.radians(box.fov_y / 2.0))
    xr = r[0, 0] * vx + r[0, 1] * vy + r[0, 2] * vz
    yr = r[1, 0] * vx + r[1, 1] * vy + r[1, 2] * vz
    lon_ok = xr >= np.hypot(xr, yr) * math.cos(math.radians(box.fov_x / 2.0))
    return lat_ok & lon_ok


def box_boundary_points(box: SphericalBox, step_deg: float = 1.0):
    """Sample the box outline in its rotated frame and map it back.

    Walks the four edges ``theta' = +/- fov_y/2`` and ``phi' = +/- fov_x/2``
    at `step_deg` increments and returns global (theta, phi) arrays, e.g.
    for drawing outlines on an ERP image.
    """
    hy = box.fov_y / 2.0
    hx = box.fov_x / 2.0
    n_x = max(2, int(math.ceil(box.fov_x / step_deg)) + 1)
    n_y = max(2, int(math.ceil(box.fov_y / step_deg)) + 1)
    us = np.linspace(-hx, hx, n_x)
    vs = np.linspace(-hy, hy, n_y)
    local_theta = np.concatenate([np.full(n_x, hy), np.full(n_x, -hy), vs, vs])
    local_phi = np.concatenate([us, us, np.full(n_y, hx), np.full(n_y, -hx)])

    rt = frame_rotation(box.center).T
    v = _unit_vector(local_theta, local_phi) @ rt.T
    theta = np.degrees(np.arcsin(np.clip(v[:, 2], -1.0, 1.0)))
    phi = np.degrees(np.arctan2(v[:, 1], v[:, 0]))
    return theta, wrap_longitude(phi)
