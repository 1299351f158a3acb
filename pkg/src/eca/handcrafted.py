"""Handcrafted edge scoring from gradient, centre-angle, and preceding-intensity features.

Each strip's centre row is scored per column with the product of three
saturating terms: gradient magnitude (Sobel), alignment of the gradient with
the direction to the image centre, and darkness of the pixels between the
frame border and the column.  The best column of each half-row becomes an
edge candidate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import EcaConfig
from .geometry import EdgeCandidate, Side, frame_center
from .strips import HALF_WINDOW

SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
SOBEL_Y = SOBEL_X.T


@dataclass(frozen=True, slots=True)
class StripScoreRow:
    """Per-column scores for one strip's centre row plus the half-row winners."""

    scores: np.ndarray  # (W,) float64 in [0, 1]
    left_best: EdgeCandidate
    right_best: EdgeCandidate


def intensity(window: np.ndarray) -> np.ndarray:
    """Unweighted RGB mean per pixel, float64 in [0, 255]."""
    return np.asarray(window, dtype=np.float64).mean(axis=-1)


def _sobel_slab(g3: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sobel gradients along the middle row of an (S, 3, W) intensity slab."""
    shape = (g3.shape[0], g3.shape[2])
    gx = np.zeros(shape, dtype=np.float64)
    gy = np.zeros(shape, dtype=np.float64)
    left, mid, right = g3[..., :-2], g3[..., 1:-1], g3[..., 2:]
    # Summation orders are chosen so a horizontal flip negates gx and
    # preserves gy bit-exactly (addition commutes; only association matters).
    gx[:, 1:-1] = (right[:, 0] - left[:, 0]) + 2.0 * (right[:, 1] - left[:, 1]) + (
        right[:, 2] - left[:, 2]
    )
    gy[:, 1:-1] = ((left[:, 2] + right[:, 2]) + 2.0 * mid[:, 2]) - (
        (left[:, 0] + right[:, 0]) + 2.0 * mid[:, 0]
    )
    return gx, gy


def sobel_center_rows(gray: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sobel gradients along the centre row of each (S, 7, W) window.

    Returns (gx, gy), each (S, W); border columns have no 3x3 support and
    are left at zero.
    """
    return _sobel_slab(gray[:, HALF_WINDOW - 1 : HALF_WINDOW + 2, :])


def sobel_gradient(gray: np.ndarray, x: int) -> tuple[float, float]:
    """Sobel gradient at column ``x`` of a single window's centre row."""
    if not 1 <= x <= gray.shape[-1] - 2:
        raise ValueError(f"column {x} has no 3x3 Sobel support")
    gx, gy = sobel_center_rows(np.asarray(gray, dtype=np.float64)[None])
    return float(gx[0, x]), float(gy[0, x])


def preceding_max(row: np.ndarray, side: Side) -> np.ndarray:
    """Running max of intensities between the frame border and each column.

    The scan moves from the border of the given half toward the image centre
    and excludes the column itself; the border column gets 0.
    """
    row = np.asarray(row, dtype=np.float64)
    out = np.empty_like(row)
    if side is Side.LEFT:
        out[0] = 0.0
        if row.size > 1:
            np.maximum.accumulate(row[:-1], out=out[1:])
    else:
        out[-1] = 0.0
        if row.size > 1:
            out[:-1] = np.maximum.accumulate(row[::-1])[:-1][::-1]
    return out


def score_pixel(
    g: tuple[float, float],
    to_center: tuple[float, float],
    preceding_intensity: float,
    cfg: EcaConfig,
) -> float:
    """Edge score in [0, 1] for a single pixel.

    ``tanh(|g| / t_grad) * (1 - tanh(angle_deg / t_angle)) *
    (1 - tanh(preceding / t_intensity))``.  A zero gradient is treated as
    pointing away from the centre (180 degrees); its score is 0 regardless.
    """
    gx, gy = g
    tox, toy = to_center
    angle_scale = 180.0 / (math.pi * cfg.angle_threshold_deg)
    if gx == 0.0 and gy == 0.0:
        scaled_angle = math.pi * angle_scale  # 180 degrees
    else:
        scaled_angle = (
            math.atan2(abs(gx * toy - gy * tox), gx * tox + gy * toy) * angle_scale
        )
    s_grad = math.tanh(math.sqrt(gx * gx + gy * gy) / cfg.gradient_threshold)
    # 1 - tanh(u) written as 2 / (1 + e^(2u)): identical value, no cancellation
    s_angle = 2.0 / (1.0 + math.exp(2.0 * scaled_angle))
    s_dark = 2.0 / (1.0 + math.exp(2.0 * preceding_intensity / cfg.intensity_threshold))
    return s_grad * s_angle * s_dark


def select_candidates_batch(
    scores: np.ndarray, strip_rows: list[int], width: int
) -> list[tuple[EdgeCandidate, EdgeCandidate]]:
    """Best column of each half for every score row at once.

    The left half is x < W/2, the right half x >= W/2.  Ties prefer the
    outermost column (smallest x on the left, largest on the right): the true
    content edge is the outermost strong edge.
    """
    split = (width + 1) // 2
    lefts = np.argmax(scores[:, :split], axis=1)
    rights = width - 1 - np.argmax(scores[:, : split - 1 : -1], axis=1)
    return [
        (
            EdgeCandidate(int(lx), row, float(scores[k, lx]), Side.LEFT),
            EdgeCandidate(int(rx), row, float(scores[k, rx]), Side.RIGHT),
        )
        for k, (row, lx, rx) in enumerate(zip(strip_rows, lefts, rights))
    ]


def select_candidates(
    scores: np.ndarray, strip_row: int, width: int
) -> tuple[EdgeCandidate, EdgeCandidate]:
    """Best column of each half-row; see :func:`select_candidates_batch`."""
    return select_candidates_batch(scores[None], [strip_row], width)[0]


def score_strips(
    windows: np.ndarray,
    strip_rows: list[int],
    frame_size: tuple[int, int],
    cfg: EcaConfig,
) -> list[StripScoreRow]:
    """Score every strip of a frame in one batched pass.

    ``windows`` is the (S, 7, W, 3) stack from :func:`eca.strips.extract_strips`
    and ``strip_rows`` the matching centre rows in frame coordinates.
    """
    width, height = frame_size
    if windows.shape[0] != len(strip_rows):
        raise ValueError("windows and strip_rows must align")
    if windows.shape[0] == 0:
        return []
    # Only centre row +/- 1 carry signal here; the rest of the 7-row window
    # exists for parity with the learned scorer's receptive field.
    slab = windows[:, HALF_WINDOW - 1 : HALF_WINDOW + 2, :, :]
    gray3 = (
        slab[..., 0].astype(np.uint16) + slab[..., 1] + slab[..., 2]
    ) / 3.0  # (S, 3, W), == intensity()
    gx, gy = _sobel_slab(gray3)  # (S, W)
    center_row = gray3[:, 1, :]  # (S, W)

    cx, cy = frame_center(width, height)
    tox = cx - np.arange(width, dtype=np.float64)[None, :]
    toy = cy - np.asarray(strip_rows, dtype=np.float64)[:, None]
    dot = gx * tox + gy * toy
    cross = gx * toy - gy * tox
    angle_scale = 180.0 / (math.pi * cfg.angle_threshold_deg)
    scaled_angle = np.arctan2(np.abs(cross), dot) * angle_scale
    zero_grad = (gx == 0.0) & (gy == 0.0)
    if zero_grad.any():
        scaled_angle[zero_grad] = math.pi * angle_scale

    split = (width + 1) // 2
    preceding = np.empty_like(center_row)
    preceding[:, 0] = 0.0
    np.maximum.accumulate(center_row[:, :-1], axis=1, out=preceding[:, 1:])
    preceding_r = np.empty_like(center_row)
    preceding_r[:, -1] = 0.0
    preceding_r[:, :-1] = np.maximum.accumulate(center_row[:, ::-1], axis=1)[:, :-1][:, ::-1]
    preceding[:, split:] = preceding_r[:, split:]

    # 1 - tanh(u) written as 2 / (1 + e^(2u)): identical value, no cancellation
    scores = (
        np.tanh(np.sqrt(gx * gx + gy * gy) / cfg.gradient_threshold)
        * (2.0 / (1.0 + np.exp(2.0 * scaled_angle)))
        * (2.0 / (1.0 + np.exp(2.0 * preceding / cfg.intensity_threshold)))
    )
    scores[:, 0] = 0.0  # no Sobel support at the border columns
    scores[:, -1] = 0.0

    return [
        StripScoreRow(scores[k], left, right)
        for k, (left, right) in enumerate(select_candidates_batch(scores, strip_rows, width))
    ]


def score_strip(
    window: np.ndarray,
    strip_row: int,
    frame_size: tuple[int, int],
    cfg: EcaConfig,
) -> StripScoreRow:
    """Score a single 7-row window; see :func:`score_strips`."""
    return score_strips(window[None], [strip_row], frame_size, cfg)[0]
