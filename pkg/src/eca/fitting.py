"""Robust circle fitting: candidate filtering, triplet hypotheses, iterated inlier least squares."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from itertools import combinations

import numpy as np

from .config import EcaConfig
from .geometry import Circle, EdgeCandidate, frame_center

COLLINEARITY_TOL = 1e-9  # on the scale-normalised triplet determinant
_SINGULAR_TOL = 1e-12


class RejectionReason(Enum):
    NO_CANDIDATES = "no_candidates"
    LOW_SCORE = "low_score"
    GEOMETRY_GATE = "geometry_gate"


@dataclass(frozen=True, slots=True)
class Accepted:
    circle: Circle
    score: float
    inlier_count: int


@dataclass(frozen=True, slots=True)
class Rejected:
    reason: RejectionReason


FitResult = Accepted | Rejected


def filter_candidates(
    candidates: list[EdgeCandidate],
    frame_size: tuple[int, int],
    cfg: EcaConfig,
) -> list[EdgeCandidate]:
    """Drop candidates hugging the frame edge or scoring below the floor."""
    width, height = frame_size
    margin = cfg.edge_margin_px
    return [
        c
        for c in candidates
        if min(c.x, width - 1 - c.x, c.y, height - 1 - c.y) >= margin
        and c.score >= cfg.min_point_score
    ]


def _circumcircles(
    tri: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Batched circumcircles of (A, 3, 2) point triplets.

    Returns (cx, cy, r, valid); ``valid`` is False for triplets collinear
    within COLLINEARITY_TOL of the normalised determinant.
    """
    ax, ay = tri[:, 0, 0], tri[:, 0, 1]
    abx, aby = tri[:, 1, 0] - ax, tri[:, 1, 1] - ay
    acx, acy = tri[:, 2, 0] - ax, tri[:, 2, 1] - ay
    det = abx * acy - aby * acx
    scale = np.hypot(abx, aby) * np.hypot(acx, acy)
    valid = (scale > 0) & (np.abs(det) > COLLINEARITY_TOL * scale)
    safe = np.where(valid, det, 1.0)
    b2 = (abx * abx + aby * aby) / 2.0
    c2 = (acx * acx + acy * acy) / 2.0
    ux = (b2 * acy - c2 * aby) / safe
    uy = (c2 * abx - b2 * acx) / safe
    r = np.hypot(ux, uy)
    return ax + ux, ay + uy, r, valid & np.isfinite(r) & (r > 0)


def circle_from_triplet(
    p1: tuple[float, float], p2: tuple[float, float], p3: tuple[float, float]
) -> Circle | None:
    """Exact circumcircle of three points, or None when (near-)collinear."""
    tri = np.array([[p1, p2, p3]], dtype=np.float64)
    cx, cy, r, valid = _circumcircles(tri)
    if not valid[0]:
        return None
    return Circle(float(cx[0]), float(cy[0]), float(r[0]))


def _lsq_circles(
    points: np.ndarray, member: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Batched algebraic least-squares circles over masked point subsets.

    ``points`` is (n, 2), ``member`` an (A, n) bool mask.  Minimises
    sum((x^2 + y^2 - 2a x - 2b y - c)^2) per row via the 3x3 normal
    equations; returns (cx, cy, r, ok).
    """
    x, y = points[:, 0], points[:, 1]
    z = x * x + y * y
    # one matmul gathers every masked moment the normal equations need
    basis = np.column_stack([x, y, z, x * x, x * y, y * y, x * z, y * z])
    moments = member.astype(np.float64) @ basis
    sx, sy, sz, sxx, sxy, syy, sxz, syz = moments.T
    n_in = member.sum(axis=1).astype(np.float64)
    m = np.empty((len(moments), 3, 3), dtype=np.float64)
    m[:, 0, 0] = 4.0 * sxx
    m[:, 0, 1] = m[:, 1, 0] = 4.0 * sxy
    m[:, 0, 2] = m[:, 2, 0] = 2.0 * sx
    m[:, 1, 1] = 4.0 * syy
    m[:, 1, 2] = m[:, 2, 1] = 2.0 * sy
    m[:, 2, 2] = n_in
    rhs = np.stack([2.0 * sxz, 2.0 * syz, sz], axis=1)
    det = (
        m[:, 0, 0] * (m[:, 1, 1] * m[:, 2, 2] - m[:, 1, 2] * m[:, 1, 2])
        - m[:, 0, 1] * (m[:, 0, 1] * m[:, 2, 2] - m[:, 1, 2] * m[:, 0, 2])
        + m[:, 0, 2] * (m[:, 0, 1] * m[:, 1, 2] - m[:, 1, 1] * m[:, 0, 2])
    )
    ok = (n_in >= 3) & np.isfinite(det) & (np.abs(det) > _SINGULAR_TOL * np.maximum(n_in, 1.0) ** 3)
    m[~ok] = np.eye(3)
    sol = np.linalg.solve(m, rhs[..., None])[..., 0]
    a, b, c = sol[:, 0], sol[:, 1], sol[:, 2]
    r2 = c + a * a + b * b
    ok &= np.isfinite(r2) & (r2 > 0)
    return a, b, np.sqrt(np.where(ok, r2, 1.0)), ok


def least_squares_circle(points: np.ndarray | list) -> Circle | None:
    """Algebraic least-squares circle through >= 3 points, or None if degenerate.

    Coordinates are centred and scaled internally for conditioning only; the
    returned circle is in the input frame.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        return None
    ref = pts.mean(axis=0)
    q = pts - ref
    scale = max(1.0, float(np.sqrt((q * q).sum(axis=1).mean())))
    cx, cy, r, ok = _lsq_circles(q / scale, np.ones((1, len(pts)), dtype=bool))
    if not ok[0]:
        return None
    return Circle(
        float(ref[0] + cx[0] * scale), float(ref[1] + cy[0] * scale), float(r[0] * scale)
    )


def _sample_triplets(n: int, attempts: int, seed: int) -> np.ndarray:
    """One uniform random 3-subset of candidate indices per attempt.

    All triplets are drawn up front in a single seeded pass (the three
    smallest of n iid uniforms index a uniform 3-subset), so the draw cannot
    depend on attempt evaluation order: parallel and serial execution see
    identical triplets.
    """
    keys = np.random.default_rng(seed).random((attempts, n))
    return np.argpartition(keys, min(3, n - 1), axis=1)[:, :3]


def ransac_fit(
    candidates: list[EdgeCandidate],
    frame_size: tuple[int, int],
    cfg: EcaConfig,
    seed: int = 0,
    *,
    exhaustive: bool = False,
    center: tuple[float, float] | None = None,
) -> FitResult:
    """Fit a circle to pre-filtered edge candidates.

    Each attempt seeds a circumcircle from a random triplet, then alternates
    least-squares refits with inlier reselection for ``ransac_iterations``
    rounds.  An attempt's score is the sum of its final inliers' edge scores.
    Attempts whose circle leaves the radius bounds or drifts too far from the
    image centre are discarded; the best survivor must still clear the circle
    score threshold.  ``exhaustive`` enumerates every triplet instead of
    sampling (used by verification harnesses).

    ``center`` overrides the reference point used for the centre-offset gate
    and internal conditioning (defaults to the image centre).
    """
    width, height = frame_size
    n = len(candidates)
    if n < 3:
        return Rejected(RejectionReason.NO_CANDIDATES)
    pts = np.array([(c.x, c.y) for c in candidates], dtype=np.float64)
    cand_scores = np.array([c.score for c in candidates], dtype=np.float64)
    cx0, cy0 = frame_center(width, height) if center is None else center
    norm = (pts - (cx0, cy0)) / width
    tol = cfg.inlier_distance_px / width

    if exhaustive:
        triplets = np.array(list(combinations(range(n), 3)), dtype=np.int64)
    else:
        triplets = _sample_triplets(n, cfg.ransac_attempts, seed)

    ccx, ccy, cr, alive = _circumcircles(norm[triplets])
    member = np.zeros((len(triplets), n), dtype=bool)
    for _ in range(cfg.ransac_iterations):
        dist = np.abs(np.hypot(norm[:, 0] - ccx[:, None], norm[:, 1] - ccy[:, None]) - cr[:, None])
        member = (dist <= tol) & alive[:, None]
        ncx, ncy, nr, ok = _lsq_circles(norm, member)
        alive &= ok
        ccx = np.where(alive, ncx, ccx)
        ccy = np.where(alive, ncy, ccy)
        cr = np.where(alive, nr, cr)
    dist = np.abs(np.hypot(norm[:, 0] - ccx[:, None], norm[:, 1] - ccy[:, None]) - cr[:, None])
    member = (dist <= tol) & alive[:, None]
    att_scores = member.astype(np.float64) @ cand_scores

    offset = np.hypot(ccx, ccy)
    out_of_gate = (cr < cfg.min_radius_frac) | (cr > cfg.max_radius_frac) | (
        offset > cfg.max_center_offset_frac
    )
    gated = alive & out_of_gate
    survivors = alive & ~out_of_gate
    if not survivors.any():
        if gated.any():
            return Rejected(RejectionReason.GEOMETRY_GATE)
        return Rejected(RejectionReason.LOW_SCORE)

    ranked = np.where(survivors, att_scores, -np.inf)
    best = int(np.argmax(ranked))  # argmax takes the first max: lowest attempt index
    if att_scores[best] < cfg.circle_score_threshold():
        return Rejected(RejectionReason.LOW_SCORE)
    circle = Circle(
        float(cx0 + ccx[best] * width),
        float(cy0 + ccy[best] * width),
        float(cr[best] * width),
    )
    return Accepted(circle, float(att_scores[best]), int(member[best].sum()))
