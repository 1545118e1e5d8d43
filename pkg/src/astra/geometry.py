"""Normalized screen rectangles and pixel-space conversions.

All on-screen regions in config bundles are stored as fractions of frame
width/height so one annotation works at any resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class BadBlock(ValueError):
    """Raised for rectangles violating 0 <= x1 < x2 <= 1, 0 <= y1 < y2 <= 1."""


def _round_half_up(value: float) -> int:
    # Not built-in round(): banker's rounding would make 229.5 resolution-dependent.
    return int(math.floor(value + 0.5))


@dataclass(frozen=True)
class NormalizedBlock:
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.x1 < self.x2 <= 1.0 and 0.0 <= self.y1 < self.y2 <= 1.0):
            raise BadBlock(
                f"invalid block [{self.x1}, {self.y1}, {self.x2}, {self.y2}]: "
                "need 0 <= x1 < x2 <= 1 and 0 <= y1 < y2 <= 1"
            )

    @classmethod
    def from_list(cls, values) -> "NormalizedBlock":
        if not (isinstance(values, (list, tuple)) and len(values) == 4):
            raise BadBlock(f"block must be a 4-element list, got {values!r}")
        try:
            x1, y1, x2, y2 = (float(v) for v in values)
        except (TypeError, ValueError):
            raise BadBlock(f"block entries must be numbers, got {values!r}") from None
        return cls(x1, y1, x2, y2)

    def to_list(self) -> list[float]:
        return [self.x1, self.y1, self.x2, self.y2]

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    def contains(self, x: float, y: float) -> bool:
        return self.x1 <= x <= self.x2 and self.y1 <= y <= self.y2


FULL_FRAME = NormalizedBlock(0.0, 0.0, 1.0, 1.0)


def denormalize(block: NormalizedBlock, width: int, height: int) -> tuple[int, int, int, int]:
    """Map a normalized block to an integer pixel rect (left, top, right, bottom).

    Each edge is round(fraction * dimension), half away from zero; the result is
    clamped so the rect is at least 1x1 and lies inside the frame.
    """
    if width < 1 or height < 1:
        raise ValueError(f"frame dimensions must be >= 1, got {width}x{height}")
    left = _round_half_up(block.x1 * width)
    top = _round_half_up(block.y1 * height)
    right = _round_half_up(block.x2 * width)
    bottom = _round_half_up(block.y2 * height)
    left = min(max(left, 0), width - 1)
    top = min(max(top, 0), height - 1)
    right = min(max(right, left + 1), width)
    bottom = min(max(bottom, top + 1), height)
    return left, top, right, bottom


def normalize_rect(
    left: int, top: int, right: int, bottom: int, width: int, height: int
) -> NormalizedBlock:
    """Inverse of :func:`denormalize` for authoring tools.

    Fractions are quantized to 4 decimals, which round-trips pixel rects
    exactly for frame dimensions below 10000 px.
    """
    if not (left < right and top < bottom):
        raise BadBlock(f"degenerate pixel rect ({left},{top},{right},{bottom})")
    return NormalizedBlock(
        round(left / width, 4),
        round(top / height, 4),
        round(right / width, 4),
        round(bottom / height, 4),
    )


def iou(a: NormalizedBlock, b: NormalizedBlock) -> float:
    """Intersection-over-union of two normalized blocks."""
    ix = max(0.0, min(a.x2, b.x2) - max(a.x1, b.x1))
    iy = max(0.0, min(a.y2, b.y2) - max(a.y1, b.y1))
    inter = ix * iy
    if inter <= 0.0:
        return 0.0
    union = a.width * a.height + b.width * b.height - inter
    return inter / union


def pixel_iou(a: tuple[int, int, int, int], b: tuple[int, int, int, int]) -> float:
    ix = max(0, min(a[2], b[2]) - max(a[0], b[0]))
    iy = max(0, min(a[3], b[3]) - max(a[1], b[1]))
    inter = ix * iy
    if inter <= 0:
        return 0.0
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    return inter / float(area_a + area_b - inter)
