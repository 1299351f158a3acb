"""Command line interface.

Subcommands: infer, eval, train, pseudo-label, synth, strips, debug-scores,
bench.  Exit codes: 0 success, 1 input error, 2 internal error.  Results go
to stdout or files; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
import traceback
from pathlib import Path

import numpy as np

from .config import EcaConfig, apply_overrides, config_default, load_config
from .dataset import (
    IMAGE_EXTENSIONS,
    AnnotationFormatError,
    EcaAnnotation,
    Source,
    benchmark_spec,
    benchmark_specs,
    build_training_samples,
    load_annotations,
    load_image,
    pseudo_label,
    render_synthetic,
    save_annotations,
    save_image,
)
from .edgenet import (
    CorruptWeightsError,
    EdgeNet,
    TrainConfig,
    compute_channel_stats,
    load_weights_file,
    save_weights_file,
    train,
)
from .estimator import (
    HANDCRAFTED,
    EstimatorVariant,
    FrameError,
    Learned,
    estimate,
    estimate_batch,
    score_frame_strips,
)
from .geometry import Circle, CircularArea, ContentArea
from .metrics import evaluate_dataset, report_markdown
from .strips import strip_heights


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file overriding the defaults")
    common.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="NAME=VALUE",
        help="override one config field (repeatable, wins over --config)",
    )
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=None, help="worker cap (default: cores)")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")

    parser = argparse.ArgumentParser(prog="eca", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("infer", parents=[common], help="estimate content areas for images")
    p.add_argument("path", help="image file or directory of images")
    p.add_argument("--variant", choices=["handcrafted", "learned"], default="handcrafted")
    p.add_argument("--model", help="weights file (required for --variant learned)")
    p.add_argument("--json", action="store_true", help="emit JSON instead of plain text")
    p.add_argument("--out", help="write results to this file (JSONL for directories)")
    p.add_argument("--overlay", metavar="DIR", help="write overlay renderings here")

    p = sub.add_parser("eval", parents=[common], help="score predictions against annotations")
    p.add_argument("--pred", required=True, help="predictions JSONL from `eca infer`")
    p.add_argument("--truth", required=True, help="annotation CSV")
    p.add_argument("--out", help="write the full report JSON here")
    p.add_argument("--markdown", action="store_true", help="print a markdown summary table")

    p = sub.add_parser("train", parents=[common], help="train the learned edge scorer")
    p.add_argument("--data", required=True, help="training directory (images + annotations.csv)")
    p.add_argument("--val", required=True, help="validation directory (same layout)")
    p.add_argument("--out", required=True, help="output weights file (*.ecanet)")
    p.add_argument("--lr", type=float, default=TrainConfig.learning_rate)
    p.add_argument("--batch-size", type=int, default=TrainConfig.batch_size)
    p.add_argument("--epochs", type=int, default=TrainConfig.max_epochs)
    p.add_argument("--patience", type=int, default=TrainConfig.early_stop_patience)
    p.add_argument("--full-frames", action="store_true", help="train on whole frames, not strips")

    p = sub.add_parser("pseudo-label", parents=[common], help="label frames with the handcrafted variant")
    p.add_argument("--frames", required=True, help="directory of frames")
    p.add_argument("--out", required=True, help="annotation CSV to write")
    p.add_argument("--source", choices=[s.value for s in Source], default=Source.SYNTHETIC.value)
    p.add_argument("--video-no", type=int, default=0)
    p.add_argument("--fps", type=float, default=None, help="sample one frame every 2 s of video")

    p = sub.add_parser("synth", parents=[common], help="render synthetic benchmark frames")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--width", type=int, default=960)
    p.add_argument("--height", type=int, default=540)
    p.add_argument(
        "--adversarial",
        action="store_true",
        help="cycle dark/bleed/overlay/corner cases as well as clean frames",
    )

    p = sub.add_parser("strips", parents=[common], help="print strip centre rows for a frame height")
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--count", type=int, default=None, help="strip count (default: config)")
    p.add_argument("--alpha", type=float, default=None, help="edge weighting (default: config)")

    p = sub.add_parser("debug-scores", parents=[common], help="dump one strip's score row as CSV")
    p.add_argument("image")
    p.add_argument("--strip", type=int, default=0, help="strip index")
    p.add_argument("--variant", choices=["handcrafted", "learned"], default="handcrafted")
    p.add_argument("--model", help="weights file for --variant learned")

    p = sub.add_parser("bench", parents=[common], help="measure per-frame estimation latency")
    p.add_argument("--variant", choices=["handcrafted", "learned"], default="handcrafted")
    p.add_argument("--model", help="weights file for --variant learned")
    p.add_argument("--frames", type=int, default=1000, help="number of timed runs")
    p.add_argument("--width", type=int, default=1920)
    p.add_argument("--height", type=int, default=1080)
    p.add_argument("--json", action="store_true")
    return parser


def _load_cfg(args: argparse.Namespace) -> EcaConfig:
    cfg = config_default()
    if args.config:
        cfg = load_config(args.config, base=cfg)
    if args.overrides:
        cfg = apply_overrides(cfg, args.overrides)
    return cfg


def _load_variant(args: argparse.Namespace) -> EstimatorVariant:
    if getattr(args, "variant", "handcrafted") == "learned":
        if not args.model:
            raise ValueError("--variant learned requires --model")
        return Learned(load_weights_file(args.model))
    return HANDCRAFTED


def _area_record(sample_id: str, area: ContentArea, width: int, height: int) -> dict:
    record: dict = {"sample_id": sample_id, "width": width, "height": height}
    if isinstance(area, CircularArea):
        record.update(
            area="circle",
            cx=area.circle.cx,
            cy=area.circle.cy,
            r=area.circle.r,
            score=area.score,
        )
    else:
        record["area"] = "full"
    return record


def _record_to_area(record: dict) -> Circle | None:
    if record["area"] == "full":
        return None
    return Circle(float(record["cx"]), float(record["cy"]), float(record["r"]))


def _draw_overlay(frame: np.ndarray, area: ContentArea, rows, path: Path) -> None:
    from PIL import Image, ImageDraw

    im = Image.fromarray(frame, mode="RGB")
    draw = ImageDraw.Draw(im)
    if isinstance(area, CircularArea):
        c = area.circle
        draw.ellipse((c.cx - c.r, c.cy - c.r, c.cx + c.r, c.cy + c.r), outline=(0, 255, 0), width=2)
    for row in rows:
        for cand in (row.left_best, row.right_best):
            shade = max(0.0, min(1.0, cand.score))
            color = (int(round(255 * (1 - shade))), int(round(255 * shade)), 0)
            draw.ellipse((cand.x - 3, cand.y - 3, cand.x + 3, cand.y + 3), fill=color)
    im.save(path)


def _run_inference(paths, variant, cfg, args):
    """Yield (path, frame, area) per image, batching across worker threads."""
    import os

    threads = args.threads if args.threads is not None else (os.cpu_count() or 1)
    chunk = 64
    for start in range(0, len(paths), chunk):
        batch_paths = paths[start : start + chunk]
        frames = [load_image(p) for p in batch_paths]
        areas = estimate_batch(frames, variant, cfg, args.seed, threads=threads)
        for path, frame, area in zip(batch_paths, frames, areas):
            if isinstance(area, FrameError):
                raise ValueError(f"{path}: {area.message}")
            yield path, frame, area


def _cmd_infer(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args)
    variant = _load_variant(args)
    root = Path(args.path)
    if not root.exists():
        raise FileNotFoundError(f"no such file or directory: {root}")
    if root.is_dir():
        paths = sorted(p for p in root.iterdir() if p.suffix.lower() in IMAGE_EXTENSIONS)
        if not paths:
            raise ValueError(f"no images found in {root}")
    else:
        paths = [root]
    overlay_dir = Path(args.overlay) if args.overlay else None
    if overlay_dir:
        overlay_dir.mkdir(parents=True, exist_ok=True)
    sink = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for path, frame, area in _run_inference(paths, variant, cfg, args):
            record = _area_record(path.stem, area, frame.shape[1], frame.shape[0])
            if args.json or len(paths) > 1 or args.out:
                print(json.dumps(record), file=sink)
            else:
                if isinstance(area, CircularArea):
                    c = area.circle
                    print(
                        f"{path.name}: circle cx={c.cx:.2f} cy={c.cy:.2f} "
                        f"r={c.r:.2f} score={area.score:.3f}",
                        file=sink,
                    )
                else:
                    print(f"{path.name}: full frame", file=sink)
            if overlay_dir:
                rows, _ = score_frame_strips(frame, variant, cfg)
                _draw_overlay(frame, area, rows, overlay_dir / f"{path.stem}_overlay.png")
    finally:
        if sink is not sys.stdout:
            sink.close()
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    predictions: dict[str, Circle | None] = {}
    dims: dict[str, tuple[int, int]] = {}
    with open(args.pred, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            predictions[record["sample_id"]] = _record_to_area(record)
            dims[record["sample_id"]] = (int(record["width"]), int(record["height"]))
    truths = {ann.sample_id: ann.area for ann in load_annotations(args.truth)}
    report = evaluate_dataset(predictions, truths, dims)
    if not args.quiet:
        print(
            f"samples={len(report.per_sample)} avg_err={report.avg_error_px:.2f}px "
            f"miss={report.miss_pct:.1f}% bad_miss={report.bad_miss_pct:.1f}%"
        )
    if args.markdown:
        print(report_markdown({"eca": report}), end="")
    if args.out:
        payload = {
            "avg_error_px": report.avg_error_px,
            "miss_pct": report.miss_pct,
            "bad_miss_pct": report.bad_miss_pct,
            "per_sample": [
                {"sample_id": s.sample_id, "nh_px": s.nh_px, "class": s.label.value}
                for s in report.per_sample
            ],
        }
        Path(args.out).write_text(json.dumps(payload, indent=2), encoding="utf-8")
    return 0


def _load_annotated_frames(root: Path) -> tuple[list[np.ndarray], list[Circle | None]]:
    annotations = load_annotations(root / "annotations.csv", check_images=True)
    if not annotations:
        raise ValueError(f"no usable annotations under {root}")
    frames = [load_image(root / ann.image_path) for ann in annotations]
    return frames, [ann.area for ann in annotations]


def _cmd_train(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args)
    train_cfg = TrainConfig(
        learning_rate=args.lr,
        batch_size=args.batch_size,
        max_epochs=args.epochs,
        early_stop_patience=args.patience,
        train_on_full_frames=args.full_frames,
    )
    frames, areas = _load_annotated_frames(Path(args.data))
    val_frames, val_areas = _load_annotated_frames(Path(args.val))
    norm = compute_channel_stats(frames)
    train_set = build_training_samples(frames, areas, norm, train_cfg, cfg)
    val_set = build_training_samples(val_frames, val_areas, norm, train_cfg, cfg)
    net = EdgeNet(norm, seed=args.seed)
    result = train(net, train_set, val_set, train_cfg, seed=args.seed)
    save_weights_file(result.net, args.out)
    if not args.quiet:
        print(
            f"trained {len(result.train_losses)} epochs; best epoch {result.best_epoch} "
            f"val_loss={min(result.val_losses):.5f}; weights -> {args.out}",
            file=sys.stderr,
        )
    return 0


def _cmd_pseudo_label(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args)
    annotations = pseudo_label(
        args.frames,
        cfg,
        seed=args.seed,
        source=Source(args.source),
        video_no=args.video_no,
        fps=args.fps,
    )
    save_annotations(annotations, args.out)
    if not args.quiet:
        print(f"wrote {len(annotations)} annotations to {args.out}", file=sys.stderr)
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    annotations = []
    if args.adversarial:
        specs = benchmark_specs(args.count, args.width, args.height, seed=args.seed)
    else:
        specs = [("clean", benchmark_spec("clean", rng, args.width, args.height)) for _ in range(args.count)]
    for k, (category, spec) in enumerate(specs):
        sample_id = f"synth_{category}_{k:05d}"
        frame, ann = render_synthetic(spec, rng_seed=args.seed * 100003 + k, sample_id=sample_id)
        name = f"{sample_id}.png"
        save_image(frame, out / name)
        annotations.append(
            EcaAnnotation(sample_id, Source.SYNTHETIC, 0, k, ann.area, name)
        )
    save_annotations(annotations, out / "annotations.csv")
    if not args.quiet:
        print(f"rendered {len(annotations)} frames under {out}", file=sys.stderr)
    return 0


def _cmd_strips(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args)
    count = args.count if args.count is not None else cfg.strip_count
    alpha = args.alpha if args.alpha is not None else cfg.strip_weighting
    print(" ".join(str(h) for h in strip_heights(args.height, count, alpha)))
    return 0


def _cmd_debug_scores(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args)
    variant = _load_variant(args)
    frame = load_image(args.image)
    rows, _ = score_frame_strips(frame, variant, cfg)
    if not 0 <= args.strip < len(rows):
        raise ValueError(f"strip index {args.strip} out of range (frame has {len(rows)})")
    row = rows[args.strip]
    print("x,score")
    for x, score in enumerate(row.scores):
        print(f"{x},{score:.6f}")
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    cfg = _load_cfg(args)
    variant = _load_variant(args)
    rng = np.random.default_rng(args.seed)
    spec = benchmark_spec("clean", rng, args.width, args.height)
    frame, _ = render_synthetic(spec, rng_seed=args.seed)
    for _ in range(5):  # warm-up
        estimate(frame, variant, cfg, args.seed)
    times = np.empty(args.frames)
    for k in range(args.frames):
        start = time.perf_counter()
        estimate(frame, variant, cfg, args.seed)
        times[k] = time.perf_counter() - start
    times *= 1e3
    stats = {
        "variant": getattr(args, "variant", "handcrafted"),
        "frames": args.frames,
        "width": args.width,
        "height": args.height,
        "min_ms": float(times.min()),
        "mean_ms": float(times.mean()),
        "p99_ms": float(np.percentile(times, 99)),
    }
    if args.json:
        print(json.dumps(stats))
    else:
        print(
            f"{stats['variant']} {args.width}x{args.height} over {args.frames} runs: "
            f"min={stats['min_ms']:.3f}ms mean={stats['mean_ms']:.3f}ms p99={stats['p99_ms']:.3f}ms"
        )
    return 0


_COMMANDS = {
    "infer": _cmd_infer,
    "eval": _cmd_eval,
    "train": _cmd_train,
    "pseudo-label": _cmd_pseudo_label,
    "synth": _cmd_synth,
    "strips": _cmd_strips,
    "debug-scores": _cmd_debug_scores,
    "bench": _cmd_bench,
}


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses status 2 for usage errors; those are input errors here
        return 0 if exc.code == 0 else 1
    try:
        return _COMMANDS[args.command](args)
    except (
        ValueError,
        OSError,
        KeyError,
        AnnotationFormatError,
        CorruptWeightsError,
        json.JSONDecodeError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2


def main() -> int:
    return run()


if __name__ == "__main__":
    sys.exit(run())
