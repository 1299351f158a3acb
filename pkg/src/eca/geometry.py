"""Shared geometry primitives for content-area estimation."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum


class Side(Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True, slots=True)
class Circle:
    """A circle in pixel coordinates; parameters are sub-pixel floats."""

    cx: float
    cy: float
    r: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.cx) and math.isfinite(self.cy) and math.isfinite(self.r)):
            raise ValueError(f"circle parameters must be finite, got {self!r}")
        if self.r <= 0:
            raise ValueError(f"circle radius must be positive, got {self.r}")


def circle_contains(circle: Circle, x: float, y: float) -> bool:
    """True iff (x, y) lies inside or on the circle (closed disk)."""
    dx = x - circle.cx
    dy = y - circle.cy
    return dx * dx + dy * dy <= circle.r * circle.r


def frame_center(width: int, height: int) -> tuple[float, float]:
    """Centre of the image in pixel-centre coordinates.

    Pixels are addressed by integer (x=column, y=row) with origin top-left, so
    the rectangle spans [0, W-1] x [0, H-1] and its centre is the mirror fixed
    point ((W-1)/2, (H-1)/2).
    """
    return (width - 1) / 2.0, (height - 1) / 2.0


@dataclass(frozen=True, slots=True)
class FullFrame:
    """Content area assumed to take up the whole image rectangle."""


@dataclass(frozen=True, slots=True)
class CircularArea:
    """Content area bounded by a fitted circle, with the fit's inlier score."""

    circle: Circle
    score: float


ContentArea = FullFrame | CircularArea

FULL_FRAME = FullFrame()


@dataclass(frozen=True, slots=True)
class EdgeCandidate:
    """Best-scoring edge pixel from one half of a strip's centre row."""

    x: int
    y: int
    score: float
    side: Side
