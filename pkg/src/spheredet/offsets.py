"""Per-latitude 3x3 sampling-offset tables for distortion-aware convolution.

A regular 3x3 filter footprint is first laid out on the tangent plane at
the raster center with one-pixel angular spacing; those nine tangent
coordinates are fixed. For every pixel row the nine points are carried
back to the sphere through the inverse gnomonic projection at that row's
latitude, giving fractional-pixel displacements relative to the regular
grid position. The displacements depend on latitude only, so one row of
nine (d_row, d_col) pairs per raster row fully describes the table.

Sign conventions: d_row grows toward the south (increasing pixel row),
d_col toward the east. Taps are indexed row-major over the regular grid,
``tap = (kr + 1) * 3 + (kc + 1)`` for kr, kc in {-1, 0, 1}, so tap 4 is
the center. Offsets are relative to the regular center pixel; consumers
add them to standard sampling positions. Rows whose taps swing past the
+/-180 meridian keep the raw d_col so a wrap-aware sampler can
interpolate across the seam.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass

import numpy as np

from .errors import IoFailure
from .geometry import ErpGeometry, TangentCoord, forward_gnomonic, LatLon

__all__ = [
    "OffsetTable",
    "TAP_GRID",
    "base_tangent_grid",
    "build_offset_table",
    "export_offsets",
    "parse_offsets",
    "write_offsets",
]

BINARY_MAGIC = b"SPHC"

# (row offset, col offset) of each tap in the regular 3x3 grid.
TAP_GRID = tuple((kr, kc) for kr in (-1, 0, 1) for kc in (-1, 0, 1))


@dataclass(frozen=True)
class OffsetTable:
    """Offsets array of shape (height, 9, 2); last axis is (d_row, d_col)."""

    geometry: ErpGeometry
    offsets: np.ndarray

    def __post_init__(self):
        if self.offsets.shape != (self.geometry.height, 9, 2):
            raise ValueError(
                f"offsets shape {self.offsets.shape} does not match geometry"
            )


def base_tangent_grid(geometry: ErpGeometry) -> tuple[TangentCoord, ...]:
    """Tangent-plane positions of the nine taps at the raster center.

    Tap (kr, kc) projects the point one pixel south-step kr and east-step
    kc away from (0, 0); the grid is antisymmetric about the center tap.
    """
    taps = []
    for kr, kc in TAP_GRID:
        point = LatLon(-kr * geometry.dtheta, kc * geometry.dphi)
        taps.append(forward_gnomonic(LatLon(0.0, 0.0), point))
    return tuple(taps)


def build_offset_table(geometry: ErpGeometry) -> OffsetTable:
    """Evaluate the inverse projection of the base grid at every row latitude."""
    grid = base_tangent_grid(geometry)
    x = np.array([t.x for t in grid])  # (9,)
    y = np.array([t.y for t in grid])

    theta = np.radians(geometry.row_latitudes())[:, None]  # (H, 1)
    rho = np.hypot(x, y)[None, :]
    center = rho == 0.0
    safe_rho = np.where(center, 1.0, rho)
    nu = np.arctan(rho)
    sin_nu, cos_nu = np.sin(nu), np.cos(nu)
    sin_t, cos_t = np.sin(theta), np.cos(theta)

    arg = np.clip(cos_nu * sin_t + y * sin_nu * cos_t / safe_rho, -1.0, 1.0)
    f_theta = np.degrees(np.arcsin(arg))
    f_phi = np.degrees(np.arctan2(x * sin_nu, rho * cos_t * cos_nu - y * sin_t * sin_nu))
    lat = np.degrees(theta)
    f_theta = np.where(center, lat, f_theta)
    f_phi = np.where(center, 0.0, f_phi)

    offsets = np.stack([(lat - f_theta) / geometry.dtheta, f_phi / geometry.dphi], axis=-1)
    return OffsetTable(geometry=geometry, offsets=offsets)


def export_offsets(table: OffsetTable, format: str) -> bytes:
    """Serialize a table.

    csv: header ``row,tap,d_row,d_col``, one line per (row, tap), values
    at 9 significant digits. binary: little-endian ``SPHC`` magic, u32
    height, u32 width, then height*9*2 float64 in (row, tap,
    [d_row, d_col]) order.
    """
    if format == "csv":
        buf = io.StringIO()
        buf.write("row,tap,d_row,d_col\n")
        for row in range(table.geometry.height):
            for tap in range(9):
                d_row, d_col = table.offsets[row, tap]
                buf.write(f"{row},{tap},{d_row:.9g},{d_col:.9g}\n")
        return buf.getvalue().encode("ascii")
    if format == "binary":
        header = BINARY_MAGIC + struct.pack(
            "<II", table.geometry.height, table.geometry.width
        )
        payload = table.offsets.astype("<f8").tobytes(order="C")
        return header + payload
    raise ValueError(f"unknown offset export format {format!r}")


def parse_offsets(data: bytes, format: str, width: int | None = None) -> OffsetTable:
    """Inverse of :func:`export_offsets`.

    The csv form does not carry the raster width; pass `width` to
    override the 2:1 panorama default.
    """
    if format == "csv":
        lines = data.decode("ascii").splitlines()
        if not lines or lines[0] != "row,tap,d_row,d_col":
            raise ValueError("missing or malformed csv header")
        records = [line.split(",") for line in lines[1:]]
        height = max(int(r[0]) for r in records) + 1
        offsets = np.zeros((height, 9, 2))
        for row, tap, d_row, d_col in records:
            offsets[int(row), int(tap)] = (float(d_row), float(d_col))
        geometry = ErpGeometry(height, width if width is not None else 2 * height)
        return OffsetTable(geometry=geometry, offsets=offsets)
    if format == "binary":
        if data[:4] != BINARY_MAGIC:
            raise ValueError("bad magic; not an offset table")
        height, stored_width = struct.unpack("<II", data[4:12])
        offsets = np.frombuffer(data[12:], dtype="<f8").reshape(height, 9, 2).copy()
        return OffsetTable(geometry=ErpGeometry(height, stored_width), offsets=offsets)
    raise ValueError(f"unknown offset export format {format!r}")


def write_offsets(table: OffsetTable, path, format: str) -> None:
    from .records import atomic_write_bytes

    try:
        atomic_write_bytes(path, export_offsets(table, format))
    except OSError as exc:
        raise IoFailure(f"could not write offsets to {path}: {exc}") from exc
