"""Box geometry: IoU, non-maximum suppression, flips, and resize planning.

Coordinates live in pixel space with the origin at the image's top-left
corner, x growing right and y growing down. All types are immutable and all
functions are pure, so everything here can be shared freely across threads.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import GeometryError
from .labels import EVENT_CLASSES


def _round_half_away(x: float) -> int:
    # round() rounds halves to even; pixel work wants 0.5 -> 1.
    if x >= 0:
        return int(math.floor(x + 0.5))
    return -int(math.floor(-x + 0.5))


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box with strictly positive width and height."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self) -> None:
        coords = (self.x1, self.y1, self.x2, self.y2)
        if not all(math.isfinite(c) and c >= 0 for c in coords):
            raise GeometryError(f"coordinates must be finite and >= 0, got {coords}")
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise GeometryError(f"box requires x1 < x2 and y1 < y2, got {coords}")

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)


@dataclass(frozen=True)
class Detection:
    """One detected event: a box, a class label, and a confidence fraction.

    Confidence is always a fraction in [0, 1] inside the pipeline; percent
    values appear only at serialization boundaries.
    """

    box: BoundingBox
    label: str
    confidence: float

    def __post_init__(self) -> None:
        if self.label not in EVENT_CLASSES:
            raise GeometryError(
                f"label {self.label!r} is not one of: " + ", ".join(EVENT_CLASSES)
            )
        if not (math.isfinite(self.confidence) and 0.0 <= self.confidence <= 1.0):
            raise GeometryError(f"confidence must lie in [0, 1], got {self.confidence}")


@dataclass(frozen=True)
class ImageDims:
    """Integer pixel dimensions of an image."""

    width: int
    height: int

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise GeometryError(f"dimensions must be >= 1, got {self.width}x{self.height}")

    @property
    def min_side(self) -> int:
        return min(self.width, self.height)


@dataclass(frozen=True)
class ScalePlan:
    """A resize decision: the scalar factor and the resulting dimensions."""

    scale: float
    new_dims: ImageDims

    def __post_init__(self) -> None:
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise GeometryError(f"scale must be positive, got {self.scale}")


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection area over union area of two boxes.

    Returns 0.0 whenever the boxes merely touch or are disjoint (the
    intersection must have strictly positive area). Symmetric and bounded
    to [0, 1]; iou(a, a) == 1.0 exactly.
    """
    iw = min(a.x2, b.x2) - max(a.x1, b.x1)
    ih = min(a.y2, b.y2) - max(a.y1, b.y1)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a.area + b.area - inter
    return inter / union


def _box_order(det: Detection) -> tuple[float, float, float, float]:
    return det.box.as_tuple()


def nms(dets: list[Detection], overlap_threshold: float) -> list[Detection]:
    """Greedy class-agnostic non-maximum suppression.

    Keeps the highest-confidence detection, discards every remaining one
    whose IoU with it reaches ``overlap_threshold``, and repeats. Confidence
    ties are broken by ascending (x1, y1, x2, y2) so the result is
    deterministic. The output is a subset of the input, sorted by
    descending confidence.
    """
    if not (0.0 <= overlap_threshold <= 1.0):
        raise GeometryError(f"overlap threshold must lie in [0, 1], got {overlap_threshold}")
    ordered = sorted(dets, key=lambda d: (-d.confidence, _box_order(d)))
    kept: list[Detection] = []
    for det in ordered:
        if all(iou(det.box, k.box) < overlap_threshold for k in kept):
            kept.append(det)
    return kept


def horizontal_flip(box: BoundingBox, dims: ImageDims) -> BoundingBox:
    """Mirror a box across the vertical centerline of an image.

    The box must lie inside ``dims``; flipping twice restores the original.
    """
    if box.x2 > dims.width or box.y2 > dims.height:
        raise GeometryError(
            f"box {box.as_tuple()} extends beyond image {dims.width}x{dims.height}"
        )
    return BoundingBox(dims.width - box.x2, box.y1, dims.width - box.x1, box.y2)


def resize_min_dim(dims: ImageDims, target_min: int) -> ScalePlan:
    """Plan a resize that makes the smaller image side exactly ``target_min``.

    The longer side scales proportionally and is rounded half away from
    zero; the shorter side is pinned to the target so rounding can never
    drift it.
    """
    if target_min < 1:
        raise GeometryError(f"target_min must be >= 1, got {target_min}")
    scale = target_min / dims.min_side
    if dims.width <= dims.height:
        new_dims = ImageDims(target_min, _round_half_away(dims.height * scale))
    else:
        new_dims = ImageDims(_round_half_away(dims.width * scale), target_min)
    return ScalePlan(scale=scale, new_dims=new_dims)


def scale_box(box: BoundingBox, plan: ScalePlan) -> BoundingBox:
    """Rescale a box to follow a planned image resize.

    Coordinates are rounded half away from zero to integer pixels. A box
    that collapses to zero width or height under that rounding is rejected.
    """
    x1 = _round_half_away(box.x1 * plan.scale)
    y1 = _round_half_away(box.y1 * plan.scale)
    x2 = _round_half_away(box.x2 * plan.scale)
    y2 = _round_half_away(box.y2 * plan.scale)
    if x1 >= x2 or y1 >= y2:
        raise GeometryError(
            f"box {box.as_tuple()} degenerates to {(x1, y1, x2, y2)} at scale {plan.scale}"
        )
    return BoundingBox(float(x1), float(y1), float(x2), float(y2))
