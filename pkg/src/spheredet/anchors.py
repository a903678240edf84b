"""Spherical anchor grids, IoU-based matching/sampling, and box regression.

Anchors are spherical boxes pinned to the cell centers of a feature grid
interpreted as a small equirectangular raster. Scales are FoV side
lengths in degrees; aspect ratios split a scale area-preservingly, so a
scale ``s`` with ratio ``r`` yields ``fov_x = s * sqrt(r)``,
``fov_y = s / sqrt(r)`` and ``fov_x * fov_y = s**2``.

Regression targets mirror the classic 2D parameterization with the FoV
angles standing in for width and height; longitude deltas always take
the shorter signed arc so seam-crossing pairs encode smoothly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyAnchors
from .geometry import ErpGeometry, SphericalBox, wrap_longitude
from .iou import iou_matrix

__all__ = [
    "AnchorConfig",
    "MatchConfig",
    "RegressionTarget",
    "MatchResult",
    "generate_anchors",
    "encode",
    "decode",
    "match_and_sample",
]

DEFAULT_SCALES = (30.0, 60.0, 90.0)
DEFAULT_ASPECT_RATIOS = (1.0, 0.5, 2.0)  # fov_x : fov_y


@dataclass(frozen=True)
class AnchorConfig:
    feature_height: int
    feature_width: int
    scales: tuple[float, ...] = DEFAULT_SCALES
    aspect_ratios: tuple[float, ...] = DEFAULT_ASPECT_RATIOS

    def __post_init__(self):
        if self.feature_height < 1 or self.feature_width < 1:
            raise ValueError("feature grid dimensions must be >= 1")
        if not self.scales or any(s <= 0 for s in self.scales):
            raise ValueError("scales must be positive")
        if not self.aspect_ratios or any(r <= 0 for r in self.aspect_ratios):
            raise ValueError("aspect ratios must be positive")

    @property
    def anchors_per_location(self) -> int:
        return len(self.scales) * len(self.aspect_ratios)


def generate_anchors(cfg: AnchorConfig) -> list[SphericalBox]:
    """All anchors, row-major over feature cells, then (scale, ratio)."""
    geom = ErpGeometry(cfg.feature_height, cfg.feature_width)
    anchors = []
    for i in range(cfg.feature_height):
        for j in range(cfg.feature_width):
            center = geom.pixel_center(i, j)
            for s in cfg.scales:
                for r in cfg.aspect_ratios:
                    root = math.sqrt(r)
                    fov_x = min(s * root, 360.0)
                    fov_y = min(s / root, 180.0)
                    anchors.append(SphericalBox(center, fov_x, fov_y))
    return anchors


@dataclass(frozen=True)
class RegressionTarget:
    """Normalized offsets from an anchor to a box."""

    t_theta: float
    t_phi: float
    t_fovx: float
    t_fovy: float

    def as_array(self) -> np.ndarray:
        return np.array([self.t_theta, self.t_phi, self.t_fovx, self.t_fovy])


def encode(box: SphericalBox, anchor: SphericalBox) -> RegressionTarget:
    """Offsets that move `anchor` onto `box`."""
    return RegressionTarget(
        t_theta=(box.center.theta - anchor.center.theta) / anchor.fov_y,
        t_phi=float(wrap_longitude(box.center.phi - anchor.center.phi)) / anchor.fov_x,
        t_fovx=math.log(box.fov_x / anchor.fov_x),
        t_fovy=math.log(box.fov_y / anchor.fov_y),
    )


def decode(t: RegressionTarget, anchor: SphericalBox) -> SphericalBox:
    """Inverse of :func:`encode`, clamped back into valid box ranges."""
    theta = max(-90.0, min(90.0, anchor.center.theta + t.t_theta * anchor.fov_y))
    phi = wrap_longitude(anchor.center.phi + t.t_phi * anchor.fov_x)
    fov_x = min(anchor.fov_x * math.exp(t.t_fovx), 360.0)
    fov_y = min(anchor.fov_y * math.exp(t.t_fovy), 180.0)
    return SphericalBox.of(theta, phi, fov_x, fov_y)


@dataclass(frozen=True)
class MatchConfig:
    """Thresholds and sampling policy for anchor-to-ground-truth matching.

    ``preset("sphrpn")`` gives the proposal-stage policy (0.7/0.3
    thresholds, 128 samples at 1:1 positive:negative, lambda 3);
    ``preset("repnet")`` the refinement-stage policy (0.5/0.3, 128 at
    1:3, lambda 1).
    """

    positive_iou: float
    negative_iou: float
    batch_size: int = 128
    positive_fraction: float = 0.5
    lambda_: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.negative_iou <= self.positive_iou <= 1.0:
            raise ValueError("need 0 <= negative_iou <= positive_iou <= 1")
        if not 0.0 < self.positive_fraction < 1.0:
            raise ValueError("positive_fraction must be in (0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    @classmethod
    def preset(cls, name: str, rng_seed: int = 0) -> "MatchConfig":
        presets = {
            "sphrpn": cls(0.7, 0.3, 128, 0.5, lambda_=3.0, rng_seed=rng_seed),
            "repnet": cls(0.5, 0.3, 128, 0.25, lambda_=1.0, rng_seed=rng_seed),
        }
        try:
            return presets[name.lower()]
        except KeyError:
            raise ValueError(f"unknown preset {name!r}; choose from {sorted(presets)}")


LABEL_POSITIVE = 1
LABEL_NEGATIVE = 0
LABEL_IGNORED = -1


@dataclass(frozen=True)
class MatchResult:
    """Per-anchor assignment plus the sampled training subset.

    ``labels[i]`` is 1 (positive), 0 (negative) or -1 (ignored);
    ``gt_indices[i]`` names the matched ground-truth box for positives
    and is -1 otherwise; ``sampled`` holds the selected anchor indices in
    ascending order.
    """

    labels: np.ndarray
    gt_indices: np.ndarray
    max_iou: np.ndarray
    sampled: np.ndarray


def match_and_sample(
    anchors: Sequence[SphericalBox],
    gts: Sequence[SphericalBox],
    cfg: MatchConfig,
) -> MatchResult:
    """Assign anchors to ground truth by fast spherical IoU and sample a batch.

    An anchor is positive when its best IoU reaches ``positive_iou``,
    negative below ``negative_iou``, ignored in between. Additionally
    every ground-truth box claims its best-IoU anchor as positive (a
    distinct anchor per box, chosen greedily in box order) so no box is
    left without a training example. Sampling draws up to ``batch_size``
    anchors at ``positive_fraction``, padding with negatives when
    positives run short; identical inputs and seed give identical output.
    """
    n = len(anchors)
    if n == 0:
        raise EmptyAnchors("cannot match against an empty anchor list")

    labels = np.full(n, LABEL_NEGATIVE, dtype=np.int8)
    gt_indices = np.full(n, -1, dtype=np.int64)
    if len(gts) == 0:
        max_iou = np.zeros(n)
    else:
        ious = iou_matrix(anchors, gts)
        max_iou = ious.max(axis=1)
        best_gt = ious.argmax(axis=1)

        labels[:] = LABEL_IGNORED
        labels[max_iou < cfg.negative_iou] = LABEL_NEGATIVE
        positive = max_iou >= cfg.positive_iou
        labels[positive] = LABEL_POSITIVE
        gt_indices[positive] = best_gt[positive]

        # Force one distinct positive anchor per ground-truth box.
        taken = np.zeros(n, dtype=bool)
        for g in range(len(gts)):
            col = np.where(taken, -1.0, ious[:, g])
            a = int(col.argmax())
            labels[a] = LABEL_POSITIVE
            gt_indices[a] = g
            taken[a] = True

    rng = np.random.default_rng(cfg.rng_seed)
    pos_idx = np.flatnonzero(labels == LABEL_POSITIVE)
    neg_idx = np.flatnonzero(labels == LABEL_NEGATIVE)
    n_pos = min(int(round(cfg.batch_size * cfg.positive_fraction)), len(pos_idx))
    n_neg = min(cfg.batch_size - n_pos, len(neg_idx))
    chosen_pos = rng.choice(pos_idx, size=n_pos, replace=False) if n_pos else pos_idx[:0]
    chosen_neg = rng.choice(neg_idx, size=n_neg, replace=False) if n_neg else neg_idx[:0]
    sampled = np.sort(np.concatenate([chosen_pos, chosen_neg])).astype(np.int64)

    return MatchResult(labels=labels, gt_indices=gt_indices, max_iou=max_iou, sampled=sampled)
