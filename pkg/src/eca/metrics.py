"""Region boundary sampling and normalised Hausdorff evaluation.

The boundary of a content area is the border of (disk intersect image
rectangle): the circle arcs lying inside the rectangle plus the rectangle-edge
segments covered by the disk.  Distances between two such boundaries are
scored with the symmetric Hausdorff distance, normalised by the ratio of a
1920x1080 reference diagonal to the image diagonal so scores are comparable
across resolutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping

import numpy as np
from scipy.spatial import cKDTree

from .geometry import Circle, CircularArea, ContentArea, FullFrame

REF_DIAGONAL = math.hypot(1920.0, 1080.0)
HIT_MAX_NH_PX = 15.0
MISS_MAX_NH_PX = 25.0


class MissClass(Enum):
    HIT = "hit"
    MISS = "miss"
    BAD_MISS = "bad_miss"


def classify(nh: float) -> MissClass:
    if nh > MISS_MAX_NH_PX:
        return MissClass.BAD_MISS
    if nh > HIT_MAX_NH_PX:
        return MissClass.MISS
    return MissClass.HIT


def as_circle(area: ContentArea | Circle | None) -> Circle | None:
    """Normalise the accepted area spellings; None means full frame."""
    if area is None or isinstance(area, FullFrame):
        return None
    if isinstance(area, CircularArea):
        return area.circle
    if isinstance(area, Circle):
        return area
    raise TypeError(f"not a content area: {area!r}")


def _arc_intervals(circle: Circle, width: int, height: int) -> list[tuple[float, float]]:
    """Angular intervals (radians) of the circle inside [0, W-1] x [0, H-1]."""
    cx, cy, r = circle.cx, circle.cy, circle.r
    x_lo, x_hi = 0.0, float(width - 1)
    y_lo, y_hi = 0.0, float(height - 1)
    crossings: list[float] = []
    for bound in (x_lo, x_hi):
        c = (bound - cx) / r
        if -1.0 <= c <= 1.0:
            t = math.acos(c)
            crossings.extend((t, 2.0 * math.pi - t))
    for bound in (y_lo, y_hi):
        s = (bound - cy) / r
        if -1.0 <= s <= 1.0:
            t = math.asin(s)
            crossings.extend((t % (2.0 * math.pi), (math.pi - t) % (2.0 * math.pi)))

    def inside(t: float) -> bool:
        x = cx + r * math.cos(t)
        y = cy + r * math.sin(t)
        return x_lo <= x <= x_hi and y_lo <= y <= y_hi

    if not crossings:
        return [(0.0, 2.0 * math.pi)] if inside(0.0) else []
    ts = sorted(set(crossings))
    out = []
    for k, t0 in enumerate(ts):
        t1 = ts[(k + 1) % len(ts)]
        if k + 1 == len(ts):
            t1 += 2.0 * math.pi
        if t1 - t0 <= 1e-12:
            continue
        if inside((t0 + t1) / 2.0):
            out.append((t0, t1))
    return out


def _edge_segments(
    circle: Circle, width: int, height: int
) -> list[tuple[tuple[float, float], tuple[float, float]]]:
    """Per rectangle edge, the sub-segment covered by the closed disk."""
    cx, cy, r = circle.cx, circle.cy, circle.r
    x_hi, y_hi = float(width - 1), float(height - 1)
    out = []
    for fixed, lo, hi, horizontal in (
        (0.0, 0.0, x_hi, True),
        (y_hi, 0.0, x_hi, True),
        (0.0, 0.0, y_hi, False),
        (x_hi, 0.0, y_hi, False),
    ):
        rad2 = r * r - ((fixed - cy) ** 2 if horizontal else (fixed - cx) ** 2)
        if rad2 < 0.0:
            continue
        half = math.sqrt(rad2)
        mid = cx if horizontal else cy
        a, b = max(lo, mid - half), min(hi, mid + half)
        if b <= a:
            continue
        if horizontal:
            out.append(((a, fixed), (b, fixed)))
        else:
            out.append(((fixed, a), (fixed, b)))
    return out


def _rect_corners(
    width: int, height: int
) -> list[tuple[tuple[float, float], tuple[float, float]]]:
    x_hi, y_hi = float(width - 1), float(height - 1)
    return [
        ((0.0, 0.0), (x_hi, 0.0)),
        ((x_hi, 0.0), (x_hi, y_hi)),
        ((x_hi, y_hi), (0.0, y_hi)),
        ((0.0, y_hi), (0.0, 0.0)),
    ]


def _sample_segment(
    p0: tuple[float, float], p1: tuple[float, float], spacing: float = 1.0
) -> np.ndarray:
    length = math.hypot(p1[0] - p0[0], p1[1] - p0[1])
    n = max(1, math.ceil(length / spacing))
    ts = np.linspace(0.0, 1.0, n + 1)
    return np.column_stack((p0[0] + ts * (p1[0] - p0[0]), p0[1] + ts * (p1[1] - p0[1])))


def _sample_arc(circle: Circle, t0: float, t1: float, spacing: float = 1.0) -> np.ndarray:
    length = circle.r * (t1 - t0)
    n = max(1, math.ceil(length / spacing))
    ts = np.linspace(t0, t1, n + 1)
    return np.column_stack(
        (circle.cx + circle.r * np.cos(ts), circle.cy + circle.r * np.sin(ts))
    )


def boundary_points(
    area: ContentArea | Circle | None,
    width: int,
    height: int,
    spacing: float = 1.0,
) -> np.ndarray:
    """Points along the region boundary at <= ``spacing`` px apart, shape (n, 2).

    A full-frame area yields the rectangle perimeter; a circular area yields
    the arcs inside the rectangle plus the rectangle-edge runs covered by the
    disk.  A disk that swallows the rectangle degenerates to the perimeter.
    """
    if width < 2 or height < 2:
        raise ValueError(f"degenerate frame {width}x{height}")
    circle = as_circle(area)
    if circle is None:
        return np.vstack([_sample_segment(p0, p1, spacing) for p0, p1 in _rect_corners(width, height)])
    chunks = [
        _sample_arc(circle, t0, t1, spacing)
        for t0, t1 in _arc_intervals(circle, width, height)
    ]
    chunks.extend(
        _sample_segment(p0, p1, spacing) for p0, p1 in _edge_segments(circle, width, height)
    )
    if not chunks:
        raise ValueError(f"{circle} does not intersect a {width}x{height} frame")
    return np.vstack(chunks)


def boundary_length(area: ContentArea | Circle | None, width: int, height: int) -> float:
    """Analytic length of the region boundary (arcs plus covered edge runs)."""
    circle = as_circle(area)
    if circle is None:
        return 2.0 * float(width - 1 + height - 1)
    arcs = sum(circle.r * (t1 - t0) for t0, t1 in _arc_intervals(circle, width, height))
    edges = sum(
        math.hypot(p1[0] - p0[0], p1[1] - p0[1])
        for p0, p1 in _edge_segments(circle, width, height)
    )
    return arcs + edges


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two 2-D point sets."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if len(a) == 0 or len(b) == 0:
        raise ValueError("hausdorff distance needs non-empty point sets")
    d_ab = cKDTree(b).query(a)[0].max()
    d_ba = cKDTree(a).query(b)[0].max()
    return float(max(d_ab, d_ba))


def normalized_hausdorff(a: np.ndarray, b: np.ndarray, width: int, height: int) -> float:
    """Hausdorff distance scaled to a 1920x1080 reference diagonal."""
    return REF_DIAGONAL / math.hypot(width, height) * hausdorff(a, b)


def area_error_px(
    predicted: ContentArea | Circle | None,
    truth: ContentArea | Circle | None,
    width: int,
    height: int,
) -> float:
    """Normalised Hausdorff distance between two content areas of one frame."""
    return normalized_hausdorff(
        boundary_points(predicted, width, height),
        boundary_points(truth, width, height),
        width,
        height,
    )


@dataclass(frozen=True, slots=True)
class SampleScore:
    sample_id: str
    nh_px: float
    label: MissClass


@dataclass(frozen=True, slots=True)
class EvalReport:
    """Per-sample normalised Hausdorff distances and the aggregate summary.

    ``miss_pct`` counts every sample above the hit threshold, bad misses
    included; ``bad_miss_pct`` counts only those above the bad-miss threshold.
    """

    per_sample: tuple[SampleScore, ...]
    avg_error_px: float
    miss_pct: float
    bad_miss_pct: float


def evaluate_dataset(
    predictions: Mapping[str, ContentArea | Circle | None],
    truths: Mapping[str, ContentArea | Circle | None],
    frame_dims: Mapping[str, tuple[int, int]] | tuple[int, int],
) -> EvalReport:
    """Score aligned predictions against ground truths.

    ``frame_dims`` is either one (width, height) for every sample or a
    per-sample mapping.  Mismatched sample ids raise ValueError listing them.
    """
    missing = sorted(set(truths) ^ set(predictions))
    if missing:
        raise ValueError(f"sample ids do not align; unmatched: {missing[:20]}")
    if not predictions:
        raise ValueError("nothing to evaluate")
    scores = []
    for sample_id in sorted(predictions):
        dims = frame_dims[sample_id] if isinstance(frame_dims, Mapping) else frame_dims
        nh = area_error_px(predictions[sample_id], truths[sample_id], dims[0], dims[1])
        scores.append(SampleScore(sample_id, nh, classify(nh)))
    n = len(scores)
    misses = sum(1 for s in scores if s.label is not MissClass.HIT)
    bad = sum(1 for s in scores if s.label is MissClass.BAD_MISS)
    return EvalReport(
        per_sample=tuple(scores),
        avg_error_px=float(np.mean([s.nh_px for s in scores])),
        miss_pct=100.0 * misses / n,
        bad_miss_pct=100.0 * bad / n,
    )


def report_markdown(reports: Mapping[str, EvalReport]) -> str:
    """Markdown summary table, one row per labelled report."""
    lines = [
        "| Method | Avg. err. (px) | Miss (%) | Bad Miss (%) |",
        "| --- | --- | --- | --- |",
    ]
    for label, rep in reports.items():
        lines.append(
            f"| {label} | {rep.avg_error_px:.2f} | {rep.miss_pct:.1f} | {rep.bad_miss_pct:.1f} |"
        )
    return "\n".join(lines) + "\n"
