"""Sigmoid-weighted horizontal strip placement and window extraction."""

from __future__ import annotations

import numpy as np

WINDOW_ROWS = 7  # scorer patch height; three valid 3x3 convs collapse 7 rows to 1
HALF_WINDOW = WINDOW_ROWS // 2
MIN_FRAME_WIDTH = 8
MIN_FRAME_HEIGHT = 2 * WINDOW_ROWS


def validate_frame(frame: np.ndarray) -> tuple[int, int]:
    """Check an RGB frame's shape and dtype; returns (width, height)."""
    if not isinstance(frame, np.ndarray) or frame.ndim != 3 or frame.shape[2] != 3:
        raise ValueError(
            f"expected an RGB frame of shape (H, W, 3), got {getattr(frame, 'shape', type(frame))}"
        )
    if frame.dtype != np.uint8:
        raise ValueError(f"expected uint8 pixel data, got {frame.dtype}")
    height, width = frame.shape[:2]
    if width < MIN_FRAME_WIDTH or height < MIN_FRAME_HEIGHT:
        raise ValueError(
            f"frame {width}x{height} too small: need width >= {MIN_FRAME_WIDTH} "
            f"and height >= {MIN_FRAME_HEIGHT}"
        )
    return width, height


def sigmoid_heights(height: int, count: int, weighting: float) -> np.ndarray:
    """Unrounded strip-centre rows; exposed separately for precision testing.

    Row i of ``count`` sits at ``height / (1 + exp(-(weighting/count) *
    (i - (count-1)/2)))`` so strips bunch toward the top and bottom of the
    frame, where the border is most prominent.
    """
    i = np.arange(count, dtype=np.float64)
    return height / (1.0 + np.exp(-(weighting / count) * (i - (count - 1) / 2.0)))


def strip_heights(height: int, count: int, weighting: float) -> list[int]:
    """Strip centre rows, rounded half-up, clamped and deduplicated.

    Clamping keeps the full 7-row window inside the frame; rounding collisions
    (possible for small frames) shrink the effective strip count.
    """
    if height < MIN_FRAME_HEIGHT:
        raise ValueError(f"height {height} cannot host a {WINDOW_ROWS}-row window")
    if count < 2:
        raise ValueError(f"need at least 2 strips, got {count}")
    if weighting <= 0:
        raise ValueError(f"weighting must be positive, got {weighting}")
    raw = sigmoid_heights(height, count, weighting)
    rounded = np.floor(raw + 0.5).astype(np.int64)
    clamped = np.clip(rounded, HALF_WINDOW, height - HALF_WINDOW - 1)
    out: list[int] = []
    for h in clamped.tolist():
        if not out or h != out[-1]:
            out.append(h)
    return out


def extract_strips(frame: np.ndarray, heights: list[int]) -> np.ndarray:
    """Stack of 7-row windows, one per centre row; a copy, frame untouched.

    Returns shape (len(heights), 7, W, 3).
    """
    width, height = validate_frame(frame)
    rows = np.asarray(heights, dtype=np.int64)
    if rows.size == 0:
        return np.empty((0, WINDOW_ROWS, width, 3), dtype=frame.dtype)
    if rows.min() < HALF_WINDOW or rows.max() > height - HALF_WINDOW - 1:
        raise ValueError(
            f"strip rows must lie in [{HALF_WINDOW}, {height - HALF_WINDOW - 1}], got {heights}"
        )
    window = rows[:, None] + np.arange(-HALF_WINDOW, HALF_WINDOW + 1)[None, :]
    return frame[window]  # fancy indexing yields a copy
