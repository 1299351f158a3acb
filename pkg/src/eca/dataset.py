"""Annotation IO, crop augmentation, pseudo-labelling, and synthetic frame rendering.

Annotations live in a flat CSV (one row per sample) recording the origin
dataset, video and frame numbers, the content-area geometry, and the image
path.  The synthetic renderer draws textured content disks over noisy dark
borders, optionally with light bleed and overlay artefacts, and returns the
exact ground-truth annotation for benchmarking.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

import numpy as np
from PIL import Image
from scipy.ndimage import gaussian_filter

from .config import EcaConfig, config_default
from .edgenet import ChannelStats, TrainConfig, make_rgbxy
from .estimator import HANDCRAFTED, estimate
from .geometry import Circle, ContentArea, circle_contains
from .metrics import _arc_intervals, as_circle
from .strips import HALF_WINDOW, strip_heights

LOGGER = logging.getLogger("eca.dataset")

IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg", ".bmp"}
MIN_CROP_SIDE = 14

CSV_FIELDS = (
    "sample_id",
    "source",
    "video_no",
    "frame_no",
    "area_type",
    "cx",
    "cy",
    "r",
    "image_path",
)


class Source(Enum):
    CHOLEC80 = "Cholec80"
    ROBUST_MIS = "RobustMIS"
    SYNTHETIC = "Synthetic"


class AnnotationFormatError(Exception):
    """A CSV row could not be parsed; carries the line number."""


@dataclass(frozen=True, slots=True)
class EcaAnnotation:
    """One annotated sample; ``area`` None means the full frame is content."""

    sample_id: str
    source: Source
    video_no: int
    frame_no: int
    area: Circle | None
    image_path: str


def load_image(path: str | Path) -> np.ndarray:
    """Load an image as uint8 RGB (H, W, 3)."""
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"))


def save_image(frame: np.ndarray, path: str | Path) -> None:
    Image.fromarray(frame, mode="RGB").save(path)


def dumps_annotations(annotations: list[EcaAnnotation]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for ann in annotations:
        if ann.area is None:
            geo = ("full", "", "", "")
        else:
            geo = ("circle", repr(ann.area.cx), repr(ann.area.cy), repr(ann.area.r))
        writer.writerow(
            (ann.sample_id, ann.source.value, ann.video_no, ann.frame_no, *geo, ann.image_path)
        )
    return buf.getvalue()


def save_annotations(annotations: list[EcaAnnotation], path: str | Path) -> None:
    Path(path).write_text(dumps_annotations(annotations), encoding="utf-8")


def loads_annotations(text: str) -> list[EcaAnnotation]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_FIELDS:
        raise AnnotationFormatError(
            f"line 1: expected header {','.join(CSV_FIELDS)!r}"
        )
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(CSV_FIELDS):
            raise AnnotationFormatError(f"line {lineno}: expected {len(CSV_FIELDS)} fields")
        sample_id, source, video_no, frame_no, area_type, cx, cy, r, image_path = row
        try:
            src = Source(source)
            if area_type == "full":
                area = None
            elif area_type == "circle":
                area = Circle(float(cx), float(cy), float(r))
            else:
                raise ValueError(f"unknown area_type {area_type!r}")
            out.append(
                EcaAnnotation(sample_id, src, int(video_no), int(frame_no), area, image_path)
            )
        except ValueError as exc:
            raise AnnotationFormatError(f"line {lineno}: {exc}") from None
    return out


def load_annotations(path: str | Path, check_images: bool = False) -> list[EcaAnnotation]:
    """Read an annotation CSV.

    With ``check_images``, rows whose image file is missing (relative to the
    CSV's directory) are skipped with a logged count.
    """
    path = Path(path)
    annotations = loads_annotations(path.read_text(encoding="utf-8"))
    if not check_images:
        return annotations
    kept = []
    skipped = 0
    for ann in annotations:
        if (path.parent / ann.image_path).is_file():
            kept.append(ann)
        else:
            skipped += 1
    if skipped:
        LOGGER.warning("skipped %d annotations with missing image files", skipped)
    return kept


def crop_augment(
    annotation: EcaAnnotation, frame: np.ndarray
) -> tuple[np.ndarray, EcaAnnotation] | None:
    """Crop the largest centred axis-aligned rectangle inside the content disk.

    The rectangle is centred on the circle centre and clamped to the frame;
    when frame clamping shrinks one axis, the other grows until its corners
    touch the circle.  Returns None when the crop would be smaller than
    14x14 or would reproduce the whole frame (disk swallows it).
    """
    if annotation.area is None:
        raise ValueError("crop augmentation requires a circular annotation")
    circle = annotation.area
    height, width = frame.shape[:2]
    corners = ((0, 0), (width - 1, 0), (0, height - 1), (width - 1, height - 1))
    if all(circle_contains(circle, x, y) for x, y in corners):
        return None  # no border in frame; the crop would duplicate the sample
    half = circle.r / math.sqrt(2.0)
    cap_x = min(circle.cx, width - 1 - circle.cx)
    cap_y = min(circle.cy, height - 1 - circle.cy)
    wx = min(half, cap_x)
    wy = min(half, cap_y)
    if wx < half:
        wy = min(cap_y, math.sqrt(max(circle.r**2 - wx * wx, 0.0)))
    elif wy < half:
        wx = min(cap_x, math.sqrt(max(circle.r**2 - wy * wy, 0.0)))
    x0, x1 = math.ceil(circle.cx - wx), math.floor(circle.cx + wx)
    y0, y1 = math.ceil(circle.cy - wy), math.floor(circle.cy + wy)
    x0, y0 = max(x0, 0), max(y0, 0)
    x1, y1 = min(x1, width - 1), min(y1, height - 1)
    if x1 - x0 + 1 < MIN_CROP_SIDE or y1 - y0 + 1 < MIN_CROP_SIDE:
        return None
    crop = frame[y0 : y1 + 1, x0 : x1 + 1].copy()
    ann = replace(
        annotation, sample_id=annotation.sample_id + "_crop", area=None, image_path=""
    )
    return crop, ann


def pseudo_label(
    frames_dir: str | Path,
    cfg: EcaConfig | None = None,
    seed: int = 0,
    source: Source = Source.SYNTHETIC,
    video_no: int = 0,
    fps: float | None = None,
) -> list[EcaAnnotation]:
    """Label every readable frame in a directory with the handcrafted estimator.

    Plain directories are labelled exhaustively; when ``fps`` is given the
    sorted file sequence is treated as consecutive video frames and sampled
    once every two seconds.  Unreadable files are skipped with a log entry.
    """
    cfg = cfg or config_default()
    frames_dir = Path(frames_dir)
    paths = sorted(p for p in frames_dir.iterdir() if p.suffix.lower() in IMAGE_EXTENSIONS)
    stride = max(1, round(2.0 * fps)) if fps else 1
    out = []
    skipped = 0
    for frame_no, path in enumerate(paths):
        if frame_no % stride:
            continue
        try:
            frame = load_image(path)
        except OSError as exc:
            LOGGER.warning("skipping unreadable frame %s: %s", path, exc)
            skipped += 1
            continue
        area = estimate(frame, HANDCRAFTED, cfg, seed)
        out.append(
            EcaAnnotation(path.stem, source, video_no, frame_no, as_circle(area), path.name)
        )
    if skipped:
        LOGGER.warning("pseudo-labelling skipped %d unreadable frames", skipped)
    return out


@dataclass(frozen=True, slots=True)
class BleedSpot:
    """A saturated glow centred on the content edge, spilling into the border."""

    angle_deg: float  # position on the content circle
    radius_px: float
    brightness: int


@dataclass(frozen=True, slots=True)
class BoxOverlay:
    """A flat rectangle burned over the frame (logo / secondary feed style)."""

    x0: int
    y0: int
    x1: int
    y1: int
    brightness: int


@dataclass(frozen=True, slots=True)
class SyntheticSpec:
    """Recipe for one rendered test frame."""

    width: int = 960
    height: int = 540
    circle: Circle | None = None
    border_noise_sigma: float = 2.0
    content_brightness: int = 150
    texture_amplitude: int = 40
    bleed: BleedSpot | None = None
    overlay: BoxOverlay | None = None
    adversarial: bool = False  # allows circles outside the detector's gates

    def __post_init__(self) -> None:
        if self.circle is None or self.adversarial:
            return
        cfg = config_default()
        cx0, cy0 = (self.width - 1) / 2.0, (self.height - 1) / 2.0
        offset = math.hypot(self.circle.cx - cx0, self.circle.cy - cy0)
        if not (
            cfg.min_radius_frac * self.width
            <= self.circle.r
            <= cfg.max_radius_frac * self.width
        ) or offset > cfg.max_center_offset_frac * self.width:
            raise ValueError(
                f"{self.circle} violates the geometry gates; set adversarial=True to keep it"
            )


def _value_noise(
    rng: np.random.Generator, height: int, width: int, cell: int, amplitude: int
) -> np.ndarray:
    """Bilinear integer value-noise; exact integer arithmetic end to end."""
    if amplitude <= 0:
        return np.zeros((height, width), dtype=np.int64)
    grid_h = height // cell + 2
    grid_w = width // cell + 2
    lattice = rng.integers(-amplitude, amplitude + 1, size=(grid_h, grid_w), dtype=np.int64)
    ys = np.arange(height)
    xs = np.arange(width)
    y0, fy = ys // cell, ys % cell
    x0, fx = xs // cell, xs % cell
    v00 = lattice[np.ix_(y0, x0)]
    v01 = lattice[np.ix_(y0, x0 + 1)]
    v10 = lattice[np.ix_(y0 + 1, x0)]
    v11 = lattice[np.ix_(y0 + 1, x0 + 1)]
    top = v00 * (cell - fy)[:, None] + v10 * fy[:, None]
    bottom = v01 * (cell - fy)[:, None] + v11 * fy[:, None]
    return (top * (cell - fx)[None, :] + bottom * fx[None, :]) // (cell * cell)


def _int_noise(rng: np.random.Generator, shape: tuple[int, int], sigma: float) -> np.ndarray:
    """Zero-mean integer noise with approximately the requested deviation."""
    if sigma <= 0:
        return np.zeros(shape, dtype=np.int64)
    # four uniform draws on [0, m]: variance m(m+2)/3, exact integer mean 2m
    m = max(1, round(math.sqrt(1.0 + 3.0 * sigma * sigma) - 1.0))
    draws = rng.integers(0, m + 1, size=(4, *shape), dtype=np.int64)
    return draws.sum(axis=0) - 2 * m


def render_synthetic(
    spec: SyntheticSpec, rng_seed: int, sample_id: str | None = None
) -> tuple[np.ndarray, EcaAnnotation]:
    """Render a frame for the given spec; deterministic for a fixed seed.

    All randomness is drawn as integers from a seeded generator so renders
    hash identically across platforms.
    """
    rng = np.random.default_rng(rng_seed)
    height, width = spec.height, spec.width
    gray = spec.content_brightness + _value_noise(
        rng, height, width, cell=24, amplitude=spec.texture_amplitude
    )
    np.clip(gray, 0, 255, out=gray)
    if spec.circle is not None:
        c = spec.circle
        ys = np.arange(height, dtype=np.float64)[:, None] - c.cy
        xs = np.arange(width, dtype=np.float64)[None, :] - c.cx
        dist2 = xs * xs + ys * ys
        border = np.clip(_int_noise(rng, (height, width), spec.border_noise_sigma), 0, 255)
        gray = np.where(dist2 <= c.r * c.r, gray, border)
        if spec.bleed is not None:
            bl = spec.bleed
            phi = math.radians(bl.angle_deg)
            gx = c.cx + c.r * math.cos(phi)
            gy = c.cy + c.r * math.sin(phi)
            glow2 = (np.arange(width, dtype=np.float64)[None, :] - gx) ** 2 + (
                np.arange(height, dtype=np.float64)[:, None] - gy
            ) ** 2
            spill = (dist2 > c.r * c.r) & (glow2 <= bl.radius_px**2)
            gray = np.where(spill, bl.brightness, gray)
    if spec.overlay is not None:
        ov = spec.overlay
        gray[max(ov.y0, 0) : ov.y1 + 1, max(ov.x0, 0) : ov.x1 + 1] = ov.brightness
    frame = np.empty((height, width, 3), dtype=np.uint8)
    frame[..., 0] = gray
    frame[..., 1] = gray * 205 // 256  # fixed warm tint; keeps zeros exactly zero
    frame[..., 2] = gray * 178 // 256
    annotation = EcaAnnotation(
        sample_id or f"synth{rng_seed:06d}",
        Source.SYNTHETIC,
        0,
        rng_seed,
        spec.circle,
        "",
    )
    return frame, annotation


BENCHMARK_CATEGORIES = ("clean", "dark", "bleed", "overlay", "corner")


def benchmark_spec(
    category: str, rng: np.random.Generator, width: int = 960, height: int = 540
) -> SyntheticSpec:
    """One randomised spec of the given benchmark category."""
    cx0, cy0 = (width - 1) / 2.0, (height - 1) / 2.0

    def centred_circle(r_lo: float, r_hi: float, max_off: float) -> Circle:
        r = rng.uniform(r_lo, r_hi) * width
        angle = rng.uniform(0.0, 2.0 * math.pi)
        off = rng.uniform(0.0, max_off) * width
        return Circle(cx0 + off * math.cos(angle), cy0 + off * math.sin(angle), r)

    if category == "clean":
        return SyntheticSpec(
            width,
            height,
            circle=centred_circle(0.30, 0.45, 0.07),
            border_noise_sigma=rng.uniform(0.0, 3.0),
            content_brightness=int(rng.integers(120, 200)),
        )
    if category == "dark":
        return SyntheticSpec(
            width,
            height,
            circle=centred_circle(0.30, 0.45, 0.07),
            border_noise_sigma=rng.uniform(0.0, 2.0),
            content_brightness=int(rng.integers(36, 60)),
            texture_amplitude=12,
        )
    if category == "bleed":
        return SyntheticSpec(
            width,
            height,
            circle=centred_circle(0.30, 0.42, 0.06),
            border_noise_sigma=rng.uniform(0.0, 2.0),
            content_brightness=int(rng.integers(120, 200)),
            bleed=BleedSpot(
                angle_deg=rng.uniform(0.0, 360.0),
                radius_px=rng.uniform(12.0, 30.0),
                brightness=int(rng.integers(120, 230)),
            ),
        )
    if category == "overlay":
        box_w = int(0.22 * width)
        box_h = int(0.12 * height)
        corner = rng.integers(0, 4)
        x0 = 0 if corner % 2 == 0 else width - box_w
        y0 = 0 if corner < 2 else height - box_h
        return SyntheticSpec(
            width,
            height,
            circle=centred_circle(0.32, 0.45, 0.06),
            border_noise_sigma=rng.uniform(0.0, 2.0),
            content_brightness=int(rng.integers(120, 200)),
            overlay=BoxOverlay(x0, y0, x0 + box_w - 1, y0 + box_h - 1, int(rng.integers(60, 110))),
        )
    if category == "corner":
        # large circle: only the corners opposite the offset stay dark
        off = rng.uniform(0.11, 0.18) * width
        direction = 1.0 if rng.integers(0, 2) else -1.0
        near = math.hypot(width / 2.0 - off, height / 2.0)
        far = math.hypot(width / 2.0 + off, height / 2.0)
        r = rng.uniform(near * 1.03, min(far * 0.97, 0.78 * width))
        return SyntheticSpec(
            width,
            height,
            circle=Circle(cx0 + direction * off, cy0, r),
            border_noise_sigma=rng.uniform(0.0, 2.0),
            content_brightness=int(rng.integers(110, 190)),
        )
    raise ValueError(f"unknown benchmark category {category!r}")


def benchmark_specs(
    count: int, width: int = 960, height: int = 540, seed: int = 0
) -> list[tuple[str, SyntheticSpec]]:
    """A benchmark suite cycling the five categories, ``count`` frames total."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        category = BENCHMARK_CATEGORIES[k % len(BENCHMARK_CATEGORIES)]
        out.append((category, benchmark_spec(category, rng, width, height)))
    return out


def make_edge_target(
    area: ContentArea | Circle | None,
    frame_size: tuple[int, int],
    sigma: float = 3.0,
    normalize: bool = True,
) -> np.ndarray:
    """Blurred edge map of the content-area boundary, peak-normalised to 1.

    Only the circle arcs are rasterised (the rectangle-edge portions of the
    region boundary are not part of the learning target); a full-frame area
    yields an all-zero map.  ``normalize=False`` keeps the raw blurred mass
    (one unit per arc pixel) for diagnostics.
    """
    width, height = frame_size
    circle = as_circle(area)
    target = np.zeros((height, width), dtype=np.float64)
    if circle is None:
        return target
    for t0, t1 in _arc_intervals(circle, width, height):
        length = circle.r * (t1 - t0)
        n = max(2, math.ceil(length / 0.5))
        ts = np.linspace(t0, t1, n, endpoint=False)
        xs = np.clip(np.rint(circle.cx + circle.r * np.cos(ts)).astype(int), 0, width - 1)
        ys = np.clip(np.rint(circle.cy + circle.r * np.sin(ts)).astype(int), 0, height - 1)
        np.add.at(target, (ys, xs), length / n)
    if sigma > 0:
        target = gaussian_filter(target, sigma, truncate=3.0, mode="constant")
    if normalize:
        peak = target.max()
        if peak > 0:
            target /= peak
    return target


def build_training_samples(
    frames: list[np.ndarray],
    areas: list[ContentArea | Circle | None],
    norm: ChannelStats,
    train_cfg: TrainConfig | None = None,
    cfg: EcaConfig | None = None,
    dtype: np.dtype = np.float32,
) -> tuple[np.ndarray, np.ndarray]:
    """Network inputs and blurred targets from annotated frames.

    By default one sample per strip window (matching the inference
    distribution); with ``train_cfg.train_on_full_frames`` one sample per
    whole frame.  All frames must share one size.
    """
    train_cfg = train_cfg or TrainConfig()
    cfg = cfg or config_default()
    if len(frames) != len(areas):
        raise ValueError("frames and areas must align")
    if not frames:
        raise ValueError("no frames given")
    inputs = []
    targets = []
    for frame, area in zip(frames, areas):
        height, width = frame.shape[:2]
        if (height, width) != frames[0].shape[:2]:
            raise ValueError("all training frames must share one size")
        edge_map = make_edge_target(area, (width, height), train_cfg.target_blur_sigma)
        rgbxy = make_rgbxy(frame, norm, dtype)
        if train_cfg.train_on_full_frames:
            inputs.append(rgbxy)
            targets.append(edge_map[None, 3:-3, 3:-3].astype(dtype))
            continue
        rows = np.asarray(strip_heights(height, cfg.strip_count, cfg.strip_weighting))
        window = rows[:, None] + np.arange(-HALF_WINDOW, HALF_WINDOW + 1)[None, :]
        stack = rgbxy[:, window, :].transpose(1, 0, 2, 3)  # (S, 5, 7, W)
        for k, row in enumerate(rows):
            inputs.append(stack[k])
            targets.append(edge_map[None, None, row, 3:-3].astype(dtype))
    return np.stack(inputs), np.stack(targets)
