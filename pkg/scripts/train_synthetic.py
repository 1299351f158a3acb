#!/usr/bin/env python3
"""End-to-end pseudo-label training demo on synthetic frames.

Renders a training pool, labels it with the handcrafted variant (no ground
truth used), trains the learned edge scorer on strip windows, and compares
both variants on a held-out set with renderer ground truth.

Usage:
    python scripts/train_synthetic.py [--train 500] [--held 100]
        [--epochs 4] [--lr 0.2] [--out model.ecanet]
"""

import argparse
import math
import time

import numpy as np

from eca.config import config_default
from eca.dataset import benchmark_specs, build_training_samples, render_synthetic
from eca.edgenet import EdgeNet, TrainConfig, compute_channel_stats, save_weights_file, train
from eca.estimator import HANDCRAFTED, Learned, estimate
from eca.metrics import area_error_px


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--train", type=int, default=500)
    parser.add_argument("--held", type=int, default=100)
    parser.add_argument("--width", type=int, default=320)
    parser.add_argument("--height", type=int, default=240)
    parser.add_argument("--epochs", type=int, default=4)
    parser.add_argument("--lr", type=float, default=0.2)
    parser.add_argument("--strip-step", type=int, default=2, help="use every k-th strip per frame")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", help="write the trained weights here")
    args = parser.parse_args()

    cfg = config_default()
    width, height = args.width, args.height

    started = time.perf_counter()
    frames, pseudo = [], []
    for k, (_, spec) in enumerate(benchmark_specs(args.train, width, height, seed=41)):
        frame, _ = render_synthetic(spec, rng_seed=50_000 + k)
        frames.append(frame)
        pseudo.append(estimate(frame, HANDCRAFTED, cfg, seed=0))
    print(f"pseudo-labelled {args.train} frames in {time.perf_counter() - started:.1f}s")

    norm = compute_channel_stats(frames)
    per_frame = math.ceil(16 / args.strip_step)  # upper bound; rows may dedup
    xs = np.empty((args.train * per_frame, 5, 7, width), dtype=np.float32)
    ts = np.empty((args.train * per_frame, 1, 1, width - 6), dtype=np.float32)
    cursor = 0
    for k, (frame, area) in enumerate(zip(frames, pseudo)):
        fx, ft = build_training_samples([frame], [area], norm)
        offset = k % args.strip_step
        take = fx[offset :: args.strip_step]
        xs[cursor : cursor + len(take)] = take
        ts[cursor : cursor + len(take)] = ft[offset :: args.strip_step]
        cursor += len(take)
    xs, ts = xs[:cursor], ts[:cursor]
    del frames

    held = []
    for k, (_, spec) in enumerate(benchmark_specs(args.held, width, height, seed=42)):
        frame, annotation = render_synthetic(spec, rng_seed=90_000 + k)
        held.append((frame, annotation.area))
    val_n = max(1, len(held) // 2)
    val = build_training_samples([f for f, _ in held[:val_n]], [a for _, a in held[:val_n]], norm)

    train_cfg = TrainConfig(learning_rate=args.lr, max_epochs=args.epochs)
    started = time.perf_counter()
    result = train(EdgeNet(norm, seed=args.seed), (xs, ts), val, train_cfg, seed=args.seed)
    print(
        f"trained {len(result.train_losses)} epochs in {time.perf_counter() - started:.1f}s; "
        f"val losses {[f'{v:.4f}' for v in result.val_losses]}"
    )

    hand = [area_error_px(estimate(f, HANDCRAFTED, cfg, 0), a, width, height) for f, a in held]
    learned = [
        area_error_px(estimate(f, Learned(result.net), cfg, 0), a, width, height) for f, a in held
    ]
    print(f"handcrafted avg NH {np.mean(hand):.2f}px  miss {100 * np.mean([v > 15 for v in hand]):.1f}%")
    print(f"learned     avg NH {np.mean(learned):.2f}px  miss {100 * np.mean([v > 15 for v in learned]):.1f}%")

    if args.out:
        save_weights_file(result.net, args.out)
        print(f"weights -> {args.out}")


if __name__ == "__main__":
    main()
