"""Greedy spherical non-maximum suppression and the two-stage selection glue."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import SphericalBox
from .iou import _BoxFeatures, _pairwise_iou

__all__ = ["Detection", "PipelineConfig", "nms", "filter_and_select"]


@dataclass(frozen=True)
class Detection:
    """A scored, class-labeled spherical box; class 0 is background."""

    box: SphericalBox
    class_id: int
    score: float

    def __post_init__(self):
        if self.class_id < 0:
            raise ValueError("class_id must be >= 0")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")


@dataclass(frozen=True)
class PipelineConfig:
    """Thresholds of the two-stage inference path: proposal NMS at 0.7,
    top-n truncation, a 0.1 confidence floor, and final NMS at 0.45."""

    proposal_nms_iou: float = 0.7
    final_nms_iou: float = 0.45
    score_floor: float = 0.1
    top_n: int = 50

    def __post_init__(self):
        for name in ("proposal_nms_iou", "final_nms_iou", "score_floor"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.top_n < 1:
            raise ValueError("top_n must be >= 1")


def nms(dets: Sequence[Detection], iou_threshold: float, *, class_aware: bool = True) -> list[int]:
    """Greedy suppression; returns surviving indices in original order.

    Detections are visited by descending score (ties broken by lower
    index); each kept detection suppresses the not-yet-visited ones of
    the same class whose spherical IoU exceeds the threshold. With
    ``class_aware=False`` (proposal stage) class labels are ignored.
    """
    if not 0.0 <= iou_threshold <= 1.0:
        raise ValueError("iou_threshold must be in [0, 1]")
    n = len(dets)
    if n == 0:
        return []
    scores = np.array([d.score for d in dets])
    classes = np.array([d.class_id for d in dets])
    order = np.lexsort((np.arange(n), -scores))
    features = _BoxFeatures([d.box for d in dets])

    alive = np.ones(n, dtype=bool)
    kept = []
    feats_by_index = _BoxFeatures([dets[i].box for i in order])
    for pos, i in enumerate(order):
        if not alive[i]:
            continue
        kept.append(int(i))
        rest = order[pos + 1:]
        rest = rest[alive[rest]]
        if class_aware:
            rest = rest[classes[rest] == classes[i]]
        if rest.size == 0:
            continue
        top = _BoxFeatures([dets[i].box])
        row = _pairwise_iou(top, _subset(features, rest))[0]
        alive[rest[row > iou_threshold]] = False
    kept.sort()
    return kept


def _subset(f: _BoxFeatures, idx: np.ndarray) -> _BoxFeatures:
    sub = _BoxFeatures.__new__(_BoxFeatures)
    for name in _BoxFeatures.__slots__:
        setattr(sub, name, getattr(f, name)[idx])
    return sub


def filter_and_select(
    dets: Sequence[Detection], cfg: PipelineConfig, stage: str
) -> list[Detection]:
    """Stage-specific selection.

    proposal: class-agnostic NMS at ``proposal_nms_iou``, then keep the
    ``top_n`` best scores. final: drop scores below ``score_floor``,
    then per-class NMS at ``final_nms_iou``. Results come back in
    descending-score order (ties by original position).
    """
    if stage == "proposal":
        kept = nms(dets, cfg.proposal_nms_iou, class_aware=False)
        kept.sort(key=lambda i: (-dets[i].score, i))
        return [dets[i] for i in kept[: cfg.top_n]]
    if stage == "final":
        survivors = [d for d in dets if d.score >= cfg.score_floor]
        kept = nms(survivors, cfg.final_nms_iou, class_aware=True)
        kept.sort(key=lambda i: (-survivors[i].score, i))
        return [survivors[i] for i in kept]
    raise ValueError(f"unknown stage {stage!r}; expected 'proposal' or 'final'")
