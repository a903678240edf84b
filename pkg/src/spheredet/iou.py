"""Fast approximate spherical IoU and the exact spherical-integral oracle.

The fast path treats each box as a latitude interval
``[theta - fov_y/2, theta + fov_y/2]`` times a longitude interval
``[phi - fov_x/2, phi + fov_x/2]`` and forms the intersection by pure
interval arithmetic; areas come from the closed form
``2 * fov_x * sin(fov_y / 2)`` (steradians on the unit sphere).

Two corrections make the interval picture usable on a sphere:

* Seam: the whole computation is repeated with both boxes shifted by 180
  degrees of longitude; the larger of the two intersections wins, so
  pairs straddling the +/-180 seam behave like their shifted twins.
* Poles: a box whose latitude interval overflows a pole is cut into two
  sub-regions, the overflow wrapping to longitude ``phi + 180`` with the
  mirrored latitude span. Sub-region intersection areas are summed and
  divided once by the union of the (whole-box) areas, which keeps the
  ratio inside [0, 1].

The exact oracle integrates box membership over an equirectangular grid
with ``cos(theta)`` weights (or by uniform Monte-Carlo sampling) and is
the ground truth the fast path is measured against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .geometry import SphericalBox, points_in_box, wrap_longitude

__all__ = [
    "IoUConfig",
    "box_area",
    "sph_iou",
    "iou_matrix",
    "exact_iou",
    "exact_area",
]


@dataclass(frozen=True)
class IoUConfig:
    """Resolution knobs for the exact-IoU oracle."""

    oracle_grid_height: int = 512
    oracle_mc_samples: int = 1_000_000
    rng_seed: int = 0

    def __post_init__(self):
        if self.oracle_grid_height < 16:
            raise ValueError("oracle_grid_height must be >= 16")
        if self.oracle_mc_samples < 1000:
            raise ValueError("oracle_mc_samples must be >= 1000")


def box_area(box: SphericalBox) -> float:
    """Closed-form box area in steradians; independent of the center."""
    return 2.0 * math.radians(box.fov_x) * math.sin(math.radians(box.fov_y) / 2.0)


class _BoxFeatures:
    """Per-box quantities the pairwise kernel combines.

    Each box contributes two latitude sub-intervals (the second one empty
    unless the box overflows a pole) and two candidate longitude centers:
    its own and the pole-wrapped ``phi + 180``. Shifting every longitude
    by 180 degrees (the seam rule) simply swaps the two centers, so both
    seam variants reuse the same arrays.
    """

    __slots__ = ("lat_lo1", "lat_hi1", "lat_lo2", "lat_hi2", "lon", "lon_alt", "half_x", "area")

    def __init__(self, boxes: Sequence[SphericalBox]):
        theta = np.array([b.center.theta for b in boxes], dtype=np.float64)
        phi = np.array([b.center.phi for b in boxes], dtype=np.float64)
        fov_x = np.array([b.fov_x for b in boxes], dtype=np.float64)
        fov_y = np.array([b.fov_y for b in boxes], dtype=np.float64)

        half_y = fov_y / 2.0
        self.lat_lo1 = np.maximum(-90.0, theta - half_y)
        self.lat_hi1 = np.minimum(90.0, theta + half_y)
        over_n = np.maximum(0.0, theta + half_y - 90.0)
        over_s = np.maximum(0.0, -90.0 - (theta - half_y))
        north = over_n > 0.0
        self.lat_lo2 = np.where(north, 90.0 - over_n, -90.0)
        self.lat_hi2 = np.where(north, 90.0, -90.0 + over_s)
        self.lon = wrap_longitude(phi)
        self.lon_alt = wrap_longitude(phi + 180.0)
        self.half_x = fov_x / 2.0
        self.area = 2.0 * np.radians(fov_x) * np.sin(np.radians(fov_y) / 2.0)


def _lon_overlap(lon_a, half_a, lon_b, half_b):
    return np.maximum(
        0.0,
        np.minimum(lon_a + half_a, lon_b + half_b)
        - np.maximum(lon_a - half_a, lon_b - half_b),
    )


def _pairwise_iou(fa: _BoxFeatures, fb: _BoxFeatures) -> np.ndarray:
    """(N, M) IoU matrix from precomputed features."""

    def col(v):
        return v[:, None]

    # Latitude overlaps do not depend on the seam variant.
    sub_a = ((fa.lat_lo1, fa.lat_hi1), (fa.lat_lo2, fa.lat_hi2))
    sub_b = ((fb.lat_lo1, fb.lat_hi1), (fb.lat_lo2, fb.lat_hi2))
    sin_half_lat = [
        [
            np.sin(
                np.radians(
                    np.maximum(
                        0.0, np.minimum(col(ha), hb) - np.maximum(col(la), lb)
                    )
                )
                / 2.0
            )
            for (lb, hb) in sub_b
        ]
        for (la, ha) in sub_a
    ]

    inter = np.zeros((fa.lon.shape[0], fb.lon.shape[0]), dtype=np.float64)
    for lons_a, lons_b in (
        ((fa.lon, fa.lon_alt), (fb.lon, fb.lon_alt)),
        ((fa.lon_alt, fa.lon), (fb.lon_alt, fb.lon)),  # both shifted by 180
    ):
        variant = np.zeros_like(inter)
        for i, lon_a in enumerate(lons_a):
            for j, lon_b in enumerate(lons_b):
                width = _lon_overlap(col(lon_a), col(fa.half_x), lon_b, fb.half_x)
                variant += 2.0 * np.radians(width) * sin_half_lat[i][j]
        inter = np.maximum(inter, variant)

    union = col(fa.area) + fb.area - inter
    return np.clip(inter / np.maximum(union, np.finfo(np.float64).tiny), 0.0, 1.0)


def iou_matrix(boxes_a: Sequence[SphericalBox], boxes_b: Sequence[SphericalBox]) -> np.ndarray:
    """Pairwise fast spherical IoU; element (i, j) equals sph_iou(a[i], b[j])."""
    if len(boxes_a) == 0 or len(boxes_b) == 0:
        raise ValueError("iou_matrix requires non-empty box lists")
    return _pairwise_iou(_BoxFeatures(boxes_a), _BoxFeatures(boxes_b))


def sph_iou(a: SphericalBox, b: SphericalBox) -> float:
    """Fast approximate spherical IoU between two boxes, in [0, 1]."""
    return float(_pairwise_iou(_BoxFeatures([a]), _BoxFeatures([b]))[0, 0])


@lru_cache(maxsize=4)
def _oracle_grid(height: int):
    """Cached pixel-center membership grid for the deterministic oracle.

    Returns row latitudes (H,), column longitudes (W,), and per-row cell
    weights cos(theta) * dtheta * dphi in steradians.
    """
    width = 2 * height
    dtheta = math.pi / height
    dphi = 2.0 * math.pi / width
    lat = 90.0 - (np.arange(height) + 0.5) * (180.0 / height)
    lon = -180.0 + (np.arange(width) + 0.5) * (360.0 / width)
    row_weight = np.cos(np.radians(lat)) * dtheta * dphi
    return lat, lon, row_weight


def _membership_grid(box: SphericalBox, lat: np.ndarray, lon: np.ndarray) -> np.ndarray:
    return points_in_box(box, lat[:, None], lon[None, :])


def _lat_band_rows(boxes: Sequence[SphericalBox], lat: np.ndarray) -> np.ndarray:
    """Rows that can possibly intersect any of the boxes.

    Every point of a box lies within its angular radius
    ``acos(cos(fov_y/2) * cos(fov_x/2))`` of the center, which bounds the
    latitudes the box can reach.
    """
    keep = np.zeros(lat.shape, dtype=bool)
    for b in boxes:
        ch = math.cos(math.radians(b.fov_x / 2.0))
        # For fov_x > 180 the farthest point sits on the horizontal
        # midline (cos theta' = 1), so the cos(fov_y/2) factor must drop.
        c = ch * math.cos(math.radians(b.fov_y / 2.0)) if ch >= 0.0 else ch
        radius = math.degrees(math.acos(max(-1.0, min(1.0, c))))
        keep |= np.abs(lat - b.center.theta) <= radius + 1.0
    return keep


def exact_area(box: SphericalBox, cfg: IoUConfig = IoUConfig()) -> float:
    """Grid-integrated area of the box membership region (steradians)."""
    lat, lon, row_weight = _oracle_grid(cfg.oracle_grid_height)
    rows = _lat_band_rows([box], lat)
    inside = _membership_grid(box, lat[rows], lon)
    return float(inside.sum(axis=1) @ row_weight[rows])


def exact_iou(a: SphericalBox, b: SphericalBox, cfg: IoUConfig = IoUConfig(), *,
              mode: str = "grid") -> float:
    """Ground-truth IoU by integrating membership over the sphere.

    ``mode="grid"`` (default, deterministic) classifies the pixel centers
    of an ``H x 2H`` equirectangular grid weighted by ``cos(theta)``;
    ``mode="mc"`` draws area-uniform samples seeded by ``cfg.rng_seed``.
    """
    if mode == "grid":
        lat, lon, row_weight = _oracle_grid(cfg.oracle_grid_height)
        rows = _lat_band_rows([a, b], lat)
        in_a = _membership_grid(a, lat[rows], lon)
        in_b = _membership_grid(b, lat[rows], lon)
        w = row_weight[rows]
        inter = (in_a & in_b).sum(axis=1) @ w
        union = (in_a | in_b).sum(axis=1) @ w
    elif mode == "mc":
        rng = np.random.default_rng(cfg.rng_seed)
        z = rng.uniform(-1.0, 1.0, cfg.oracle_mc_samples)
        lat = np.degrees(np.arcsin(z))
        lon = rng.uniform(-180.0, 180.0, cfg.oracle_mc_samples)
        in_a = points_in_box(a, lat, lon)
        in_b = points_in_box(b, lat, lon)
        inter = float(np.count_nonzero(in_a & in_b))
        union = float(np.count_nonzero(in_a | in_b))
    else:
        raise ValueError(f"unknown oracle mode {mode!r}")
    if union == 0.0:
        return 0.0
    return float(inter / union)
