"""Single-call content area estimation: strips -> edge scoring -> circle fit."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import EcaConfig, config_default
from .edgenet import EdgeNet, score_strips_learned
from .fitting import Accepted, filter_candidates, ransac_fit
from .geometry import FULL_FRAME, CircularArea, ContentArea
from .handcrafted import score_strips
from .strips import extract_strips, strip_heights, validate_frame


@dataclass(frozen=True, slots=True)
class Handcrafted:
    """Edge scoring from gradient, centre-angle, and preceding-intensity features."""


@dataclass(frozen=True, slots=True)
class Learned:
    """Edge scoring from a trained convolutional scorer."""

    net: EdgeNet


EstimatorVariant = Handcrafted | Learned

HANDCRAFTED = Handcrafted()


def score_frame_strips(
    frame: np.ndarray,
    variant: EstimatorVariant = HANDCRAFTED,
    cfg: EcaConfig | None = None,
):
    """Scored strip rows for a frame under the chosen variant.

    Returns (rows, (width, height)); used by :func:`estimate` and by
    diagnostic tooling that wants the raw candidates.
    """
    cfg = cfg or config_default()
    width, height = validate_frame(frame)
    heights = strip_heights(height, cfg.strip_count, cfg.strip_weighting)
    if isinstance(variant, Learned):
        rows = score_strips_learned(variant.net, frame, heights)
    else:
        rows = score_strips(extract_strips(frame, heights), heights, (width, height), cfg)
    return rows, (width, height)


def estimate(
    frame: np.ndarray,
    variant: EstimatorVariant = HANDCRAFTED,
    cfg: EcaConfig | None = None,
    seed: int = 0,
) -> ContentArea:
    """Estimate the content area of one RGB frame.

    Returns the fitted circle with its score when a confident circle is
    found; otherwise the content area is assumed to cover the whole frame.
    Only malformed frames raise.
    """
    cfg = cfg or config_default()
    rows, frame_size = score_frame_strips(frame, variant, cfg)
    candidates = [r.left_best for r in rows] + [r.right_best for r in rows]
    kept = filter_candidates(candidates, frame_size, cfg)
    fit = ransac_fit(kept, frame_size, cfg, seed)
    if isinstance(fit, Accepted):
        return CircularArea(fit.circle, fit.score)
    return FULL_FRAME


@dataclass(frozen=True, slots=True)
class FrameError:
    """Per-index failure marker from a batch run."""

    index: int
    message: str


def estimate_batch(
    frames: list[np.ndarray],
    variant: EstimatorVariant = HANDCRAFTED,
    cfg: EcaConfig | None = None,
    seed: int = 0,
    threads: int | None = None,
) -> list[ContentArea | FrameError]:
    """Order-preserving batch of :func:`estimate`; per-frame errors isolated.

    A malformed frame contributes a :class:`FrameError` at its index and the
    batch continues.  ``threads`` > 1 runs frames concurrently (results are
    identical to the serial order).
    """
    cfg = cfg or config_default()

    def run(item: tuple[int, np.ndarray]) -> ContentArea | FrameError:
        index, frame = item
        try:
            return estimate(frame, variant, cfg, seed)
        except ValueError as exc:
            return FrameError(index, str(exc))

    items = list(enumerate(frames))
    if threads is not None and threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run, items))
    return [run(item) for item in items]
