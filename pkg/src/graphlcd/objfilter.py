"""Pre-graph object filtering: movable classes and oversized overlapping boxes."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .ingest import Detection

MOVABLE_COCO = frozenset({
    "person", "bicycle", "car", "motorcycle", "airplane", "bus", "train", "truck",
    "boat", "bird", "cat", "dog", "horse", "sheep", "cow",
})


@dataclass(frozen=True)
class FilterConfig:
    denylist: frozenset[str] = field(default_factory=lambda: MOVABLE_COCO)
    max_area_fraction: float = 0.5
    overlap_iou_threshold: float = 0.3

    def __post_init__(self):
        object.__setattr__(self, "denylist", frozenset(self.denylist))
        if not 0.0 < self.max_area_fraction <= 1.0:
            raise ValueError("max_area_fraction must be in (0, 1]")
        if not 0.0 <= self.overlap_iou_threshold <= 1.0:
            raise ValueError("overlap_iou_threshold must be in [0, 1]")


def bbox_iou(a: Sequence[float], b: Sequence[float]) -> float:
    ix = min(a[2], b[2]) - max(a[0], b[0])
    iy = min(a[3], b[3]) - max(a[1], b[1])
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return inter / union if union > 0 else 0.0


def filter_movable(objects: Sequence[Detection], cfg: FilterConfig = FilterConfig()) -> list[Detection]:
    return [d for d in objects if d.label not in cfg.denylist]


def filter_oversized(objects: Sequence[Detection], width: float, height: float,
                     cfg: FilterConfig = FilterConfig()) -> list[Detection]:
    """Drop boxes that are both too large and overlapping some other box.

    Overlap is judged against the full input list, so the result does not
    depend on which other boxes happen to be dropped.
    """
    image_area = float(width) * float(height)
    keep = []
    for k, d in enumerate(objects):
        big = d.area / image_area > cfg.max_area_fraction
        if big and any(bbox_iou(d.bbox, o.bbox) > cfg.overlap_iou_threshold
                       for m, o in enumerate(objects) if m != k):
            continue
        keep.append(d)
    return keep


def filter_objects(objects: Sequence[Detection], width: float, height: float,
                   cfg: FilterConfig = FilterConfig()) -> list[Detection]:
    return filter_oversized(filter_movable(objects, cfg), width, height, cfg)
