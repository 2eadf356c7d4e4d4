"""Box geometry: squarification, size gating, IoU, and center-priority NMS."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .annotations import BBox
from .common import ConfigError


@dataclass(frozen=True)
class SquareCrop:
    """Squarified, in-bounds crop rectangle derived from a person box.

    ``center_distance`` is the Euclidean distance from the crop center to
    the image center, which drives NMS priority.
    """

    x: float
    y: float
    side: float
    source_box: BBox
    center_distance: float


def squarify(box: BBox, img_w: float, img_h: float) -> SquareCrop:
    """Expand a box to a square with side = max(w, h).

    The square is centered on the box center, then translated (never
    resized) the minimal distance needed to lie fully inside the image.
    Sides larger than the image's shorter dimension are clamped to it,
    which makes the operation total.
    """
    side = min(max(box.w, box.h), min(img_w, img_h))
    cx = box.x + box.w / 2.0
    cy = box.y + box.h / 2.0
    x = min(max(cx - side / 2.0, 0.0), img_w - side)
    y = min(max(cy - side / 2.0, 0.0), img_h - side)
    dist = math.hypot(x + side / 2.0 - img_w / 2.0, y + side / 2.0 - img_h / 2.0)
    return SquareCrop(x=x, y=y, side=side, source_box=box, center_distance=dist)


def size_gate(crop: SquareCrop, min_side: float) -> bool:
    """True iff the crop side meets the minimum (inclusive)."""
    return crop.side >= min_side


def iou(a: tuple[float, float, float, float], b: tuple[float, float, float, float]) -> float:
    """Intersection over union of two (x, y, w, h) rects; 0 when disjoint."""
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    ix = max(0.0, min(ax + aw, bx + bw) - max(ax, bx))
    iy = max(0.0, min(ay + ah, by + bh) - max(ay, by))
    inter = ix * iy
    if inter <= 0.0:
        return 0.0
    union = aw * ah + bw * bh - inter
    return inter / union


def _rect(c: SquareCrop) -> tuple[float, float, float, float]:
    return (c.x, c.y, c.side, c.side)


def center_priority_nms(crops: list[SquareCrop], iou_threshold: float) -> list[SquareCrop]:
    """Greedy NMS keeping the crop closest to the image center first.

    Candidates are ordered by ascending center distance (ties broken by x,
    then y); a candidate is suppressed iff its IoU with any already-kept
    crop exceeds the threshold.  The ordering is recomputed internally, so
    the result does not depend on input order.
    """
    if not 0.0 <= iou_threshold <= 1.0:
        raise ConfigError(f"iou_threshold must be in [0, 1], got {iou_threshold}")
    ordered = sorted(crops, key=lambda c: (c.center_distance, c.x, c.y))
    kept: list[SquareCrop] = []
    for cand in ordered:
        if all(iou(_rect(cand), _rect(k)) <= iou_threshold for k in kept):
            kept.append(cand)
    return kept
