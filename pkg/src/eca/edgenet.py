"""Shallow convolutional edge scorer: numpy forward/backward, SGD training, weights IO.

The network is three valid 3x3 convolutions (5->8->16->32 channels, ReLU
between) and a 1x1 sigmoid head.  Inputs are RGBXY: normalised colour plus
per-pixel coordinates in [-0.5, 0.5].  With no padding, a 7-row window
collapses to a single output row, which is why strips are 7 pixels tall.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .handcrafted import StripScoreRow, select_candidates_batch
from .strips import HALF_WINDOW, WINDOW_ROWS

INPUT_CHANNELS = 5
LAYER_WIDTHS = (8, 16, 32)
EDGE_OFFSET = 3  # columns lost per side to the three valid 3x3 convolutions

MAGIC = b"ECANET01"


class CorruptWeightsError(Exception):
    """Weights stream failed validation (magic, shapes, or truncation)."""


class TrainingDivergedError(Exception):
    """Loss became non-finite during training."""


@dataclass
class ChannelStats:
    """Per-channel RGB mean and standard deviation of the training split."""

    mean: np.ndarray  # (3,)
    std: np.ndarray  # (3,)

    def __post_init__(self) -> None:
        self.mean = np.asarray(self.mean, dtype=np.float64).reshape(3)
        self.std = np.asarray(self.std, dtype=np.float64).reshape(3)
        if not (np.all(np.isfinite(self.mean)) and np.all(np.isfinite(self.std))):
            raise ValueError("channel stats must be finite")
        if np.any(self.std <= 0):
            raise ValueError(f"channel std must be positive, got {self.std}")


def compute_channel_stats(frames) -> ChannelStats:
    """Mean/std per RGB channel over an iterable of uint8 frames."""
    count = 0
    total = np.zeros(3, dtype=np.float64)
    total_sq = np.zeros(3, dtype=np.float64)
    for frame in frames:
        data = np.asarray(frame, dtype=np.float64).reshape(-1, 3)
        count += data.shape[0]
        total += data.sum(axis=0)
        total_sq += (data * data).sum(axis=0)
    if count == 0:
        raise ValueError("no frames given")
    mean = total / count
    var = np.maximum(total_sq / count - mean * mean, 0.0)
    return ChannelStats(mean, np.sqrt(var))


def make_rgbxy(
    frame: np.ndarray, norm: ChannelStats, dtype: np.dtype = np.float32
) -> np.ndarray:
    """RGBXY input tensor (5, H, W) for a uint8 RGB frame.

    Colour channels are standardised with the training-split stats; the X and
    Y channels span [-0.5, 0.5] with (0, 0) at the frame centre.
    """
    height, width = frame.shape[:2]
    out = np.empty((INPUT_CHANNELS, height, width), dtype=dtype)
    rgb = frame.astype(np.float64).transpose(2, 0, 1)
    out[:3] = (rgb - norm.mean[:, None, None]) / norm.std[:, None, None]
    xs = (np.arange(width, dtype=np.float64) - (width - 1) / 2.0) / max(width - 1, 1)
    ys = (np.arange(height, dtype=np.float64) - (height - 1) / 2.0) / max(height - 1, 1)
    out[3] = np.broadcast_to(xs[None, :], (height, width))
    out[4] = np.broadcast_to(ys[:, None], (height, width))
    return out


@dataclass
class ConvLayer:
    kernel: np.ndarray  # (out, in, kh, kw)
    bias: np.ndarray  # (out,)


def _glorot_uniform(rng: np.random.Generator, shape: tuple[int, ...], dtype) -> np.ndarray:
    out_ch, in_ch, kh, kw = shape
    fan_in = in_ch * kh * kw
    fan_out = out_ch * kh * kw
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def _conv_forward(
    x: np.ndarray, kernel: np.ndarray, bias: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Valid cross-correlation; returns (output, im2col cache).

    x: (B, C, H, W), kernel: (O, C, kh, kw) -> (B, O, H-kh+1, W-kw+1).
    """
    batch = x.shape[0]
    out_ch, _, kh, kw = kernel.shape
    win = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(2, 3))
    out_h, out_w = win.shape[2], win.shape[3]
    cols = np.ascontiguousarray(win.transpose(0, 2, 3, 1, 4, 5)).reshape(
        batch * out_h * out_w, -1
    )
    out = cols @ kernel.reshape(out_ch, -1).T
    out += bias
    return out.reshape(batch, out_h, out_w, out_ch).transpose(0, 3, 1, 2), cols


def _conv_backward(
    dy: np.ndarray, cols: np.ndarray, x_shape: tuple[int, ...], kernel: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients of a valid cross-correlation: (dx, dkernel, dbias)."""
    out_ch, in_ch, kh, kw = kernel.shape
    dy_mat = np.ascontiguousarray(dy.transpose(0, 2, 3, 1)).reshape(-1, out_ch)
    dkernel = (dy_mat.T @ cols).reshape(kernel.shape)
    dbias = dy_mat.sum(axis=0)
    padded = np.pad(dy, ((0, 0), (0, 0), (kh - 1, kh - 1), (kw - 1, kw - 1)))
    flipped = np.ascontiguousarray(kernel[:, :, ::-1, ::-1].transpose(1, 0, 2, 3))
    dx, _ = _conv_forward(padded, flipped, np.zeros(in_ch, dtype=dy.dtype))
    return dx, dkernel, dbias


class EdgeNet:
    """The strip edge scorer network; weights plus input normalisation."""

    def __init__(
        self,
        norm: ChannelStats,
        layers: list[ConvLayer] | None = None,
        seed: int = 0,
        dtype: np.dtype = np.float32,
    ) -> None:
        self.norm = norm
        self.dtype = np.dtype(dtype)
        if layers is not None:
            self.layers = layers
            self._validate_shapes()
            return
        rng = np.random.default_rng(seed)
        shapes = [
            (LAYER_WIDTHS[0], INPUT_CHANNELS, 3, 3),
            (LAYER_WIDTHS[1], LAYER_WIDTHS[0], 3, 3),
            (LAYER_WIDTHS[2], LAYER_WIDTHS[1], 3, 3),
            (1, LAYER_WIDTHS[2], 1, 1),
        ]
        self.layers = [
            ConvLayer(_glorot_uniform(rng, s, self.dtype), np.zeros(s[0], dtype=self.dtype))
            for s in shapes
        ]

    def _validate_shapes(self) -> None:
        if len(self.layers) != 4:
            raise ValueError(f"expected 4 layers, got {len(self.layers)}")
        expect_in = INPUT_CHANNELS
        for k, layer in enumerate(self.layers):
            out_ch, in_ch, kh, kw = layer.kernel.shape
            want_k = 1 if k == 3 else 3
            if in_ch != expect_in or kh != want_k or kw != want_k:
                raise ValueError(f"layer {k} has shape {layer.kernel.shape}")
            if layer.bias.shape != (out_ch,):
                raise ValueError(f"layer {k} bias shape {layer.bias.shape}")
            expect_in = out_ch
        if self.layers[3].kernel.shape[0] != 1:
            raise ValueError("head must have a single output channel")

    def clone_weights(self) -> list[ConvLayer]:
        return [ConvLayer(l.kernel.copy(), l.bias.copy()) for l in self.layers]

    def set_weights(self, layers: list[ConvLayer]) -> None:
        self.layers = [ConvLayer(l.kernel.copy(), l.bias.copy()) for l in layers]

    def forward_logits(
        self, x: np.ndarray, keep_caches: bool = False
    ) -> tuple[np.ndarray, list | None]:
        """Pre-sigmoid activations for a (B, 5, h, W) batch, h >= 7."""
        x = np.asarray(x, dtype=self.dtype)
        if x.ndim != 4 or x.shape[1] != INPUT_CHANNELS:
            raise ValueError(f"expected input of shape (B, 5, h, W), got {x.shape}")
        if x.shape[2] < WINDOW_ROWS or x.shape[3] < WINDOW_ROWS:
            raise ValueError(
                f"input spatial size {x.shape[2]}x{x.shape[3]} is below the "
                f"{WINDOW_ROWS}x{WINDOW_ROWS} receptive field"
            )
        caches = [] if keep_caches else None
        for k, layer in enumerate(self.layers):
            y, cols = _conv_forward(x, layer.kernel, layer.bias)
            if k < 3:
                mask = y > 0
                y_act = y * mask
            else:
                mask = None
                y_act = y
            if keep_caches:
                caches.append((x.shape, cols, mask))
            x = y_act
        return x, caches

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Edge probabilities for a (B, 5, h, W) batch -> (B, 1, h-6, W-6)."""
        logits, _ = self.forward_logits(x)
        return _sigmoid(logits)

    def backward(self, dlogits: np.ndarray, caches: list) -> list[tuple[np.ndarray, np.ndarray]]:
        """Parameter gradients given dLoss/dlogits; pairs up with ``layers``."""
        grads: list[tuple[np.ndarray, np.ndarray]] = [None] * 4  # type: ignore[list-item]
        dy = dlogits.astype(self.dtype)
        for k in range(3, -1, -1):
            x_shape, cols, mask = caches[k]
            dx, dkernel, dbias = _conv_backward(dy, cols, x_shape, self.layers[k].kernel)
            grads[k] = (dkernel, dbias)
            dy = dx
            if k > 0:
                dy = dy * caches[k - 1][2]  # ReLU mask of the previous layer's output
        return grads


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _bce_with_logits(logits: np.ndarray, targets: np.ndarray) -> float:
    """Mean soft binary cross entropy, computed stably from logits."""
    z = logits.astype(np.float64)
    t = targets.astype(np.float64)
    loss = np.maximum(z, 0.0) - z * t + np.log1p(np.exp(-np.abs(z)))
    return float(loss.mean())


@dataclass(frozen=True)
class TrainConfig:
    """Optimisation settings; defaults follow the published training recipe."""

    learning_rate: float = 0.001
    batch_size: int = 8
    target_blur_sigma: float = 3.0
    early_stop_patience: int = 5
    max_epochs: int = 50
    shuffle: bool = True
    train_on_full_frames: bool = False


@dataclass
class TrainResult:
    net: EdgeNet
    train_losses: list[float] = field(default_factory=list)
    val_losses: list[float] = field(default_factory=list)
    best_epoch: int = -1


def _epoch_loss(net: EdgeNet, inputs: np.ndarray, targets: np.ndarray, batch: int) -> float:
    total = 0.0
    count = 0
    for start in range(0, len(inputs), batch):
        sl = slice(start, start + batch)
        logits, _ = net.forward_logits(inputs[sl])
        n = logits.size
        total += _bce_with_logits(logits, targets[sl]) * n
        count += n
    return total / max(count, 1)


def train(
    net: EdgeNet,
    train_samples: tuple[np.ndarray, np.ndarray],
    val_samples: tuple[np.ndarray, np.ndarray] | None,
    cfg: TrainConfig | None = None,
    seed: int = 0,
) -> TrainResult:
    """Plain SGD on soft BCE against blurred edge-map targets.

    ``train_samples`` is (inputs, targets) with inputs (M, 5, h, W) and
    targets matching the network output (M, 1, h-6, W-6).  Validation loss
    drives early stopping; the returned net carries the best-validation
    snapshot.  Raises :class:`TrainingDivergedError` on non-finite loss.
    """
    cfg = cfg or TrainConfig()
    inputs, targets = train_samples
    inputs = np.asarray(inputs)
    targets = np.asarray(targets)
    if len(inputs) == 0:
        raise ValueError("training set is empty")
    if val_samples is not None:
        val_x = np.asarray(val_samples[0])
        val_t = np.asarray(val_samples[1])
    result = TrainResult(net)
    rng = np.random.default_rng(seed)
    best = net.clone_weights()
    best_val = np.inf
    stale = 0
    for epoch in range(cfg.max_epochs):
        order = rng.permutation(len(inputs)) if cfg.shuffle else np.arange(len(inputs))
        epoch_total = 0.0
        epoch_count = 0
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            x = inputs[idx]
            t = targets[idx]
            logits, caches = net.forward_logits(x, keep_caches=True)
            loss = _bce_with_logits(logits, t)
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}, sample offset {start}"
                )
            epoch_total += loss * logits.size
            epoch_count += logits.size
            dlogits = (_sigmoid(logits) - t.astype(logits.dtype)) / logits.size
            grads = net.backward(dlogits, caches)
            if cfg.learning_rate != 0.0:
                for layer, (dk, db) in zip(net.layers, grads):
                    layer.kernel -= cfg.learning_rate * dk
                    layer.bias -= cfg.learning_rate * db
        result.train_losses.append(epoch_total / epoch_count)
        if val_samples is not None:
            val_loss = _epoch_loss(net, val_x, val_t, max(cfg.batch_size, 32))
            result.val_losses.append(val_loss)
            if val_loss < best_val:
                best_val = val_loss
                best = net.clone_weights()
                result.best_epoch = epoch
                stale = 0
            else:
                stale += 1
                if stale >= cfg.early_stop_patience:
                    break
        else:
            best = net.clone_weights()
            result.best_epoch = epoch
    net.set_weights(best)
    return result


def score_strips_learned(
    net: EdgeNet, frame: np.ndarray, strip_rows: list[int]
) -> list[StripScoreRow]:
    """Run the network over each strip window and select half-row candidates.

    Columns lost to the valid convolutions (3 per side) keep score 0; the
    winner selection matches the handcrafted path exactly.
    """
    height, width = frame.shape[:2]
    if not strip_rows:
        return []
    rgbxy = make_rgbxy(frame, net.norm, net.dtype)
    rows = np.asarray(strip_rows, dtype=np.int64)
    window = rows[:, None] + np.arange(-HALF_WINDOW, HALF_WINDOW + 1)[None, :]
    batch = rgbxy[:, window, :].transpose(1, 0, 2, 3)  # (S, 5, 7, W)
    probs = net.forward(batch)[:, 0, 0, :]  # (S, W-6)
    scores = np.zeros((len(strip_rows), width), dtype=np.float64)
    scores[:, EDGE_OFFSET : width - EDGE_OFFSET] = probs
    return [
        StripScoreRow(scores[k], left, right)
        for k, (left, right) in enumerate(
            select_candidates_batch(scores, [int(r) for r in strip_rows], width)
        )
    ]


def score_strip_learned(net: EdgeNet, frame: np.ndarray, strip_row: int) -> StripScoreRow:
    return score_strips_learned(net, frame, [strip_row])[0]


def save_weights(net: EdgeNet) -> bytes:
    """Serialise weights and channel stats; little-endian flat binary."""
    parts = [MAGIC]
    parts.append(struct.pack("<6d", *net.norm.mean, *net.norm.std))
    parts.append(struct.pack("<I", len(net.layers)))
    for layer in net.layers:
        out_ch, in_ch, kh, kw = layer.kernel.shape
        parts.append(struct.pack("<4I", out_ch, in_ch, kh, kw))
        parts.append(np.ascontiguousarray(layer.kernel, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(layer.bias, dtype="<f8").tobytes())
    return b"".join(parts)


def load_weights(data: bytes, dtype: np.dtype = np.float32) -> EdgeNet:
    """Parse a weights blob; raises :class:`CorruptWeightsError` on any mismatch."""
    view = memoryview(data)
    pos = 0

    def take(count: int) -> memoryview:
        nonlocal pos
        if pos + count > len(view):
            raise CorruptWeightsError(
                f"truncated stream: wanted {count} bytes at offset {pos}, have {len(view) - pos}"
            )
        chunk = view[pos : pos + count]
        pos += count
        return chunk

    if bytes(take(len(MAGIC))) != MAGIC:
        raise CorruptWeightsError("bad magic header")
    stats = struct.unpack("<6d", take(48))
    try:
        norm = ChannelStats(np.array(stats[:3]), np.array(stats[3:]))
    except ValueError as exc:
        raise CorruptWeightsError(f"bad channel stats: {exc}") from None
    (layer_count,) = struct.unpack("<I", take(4))
    if layer_count != 4:
        raise CorruptWeightsError(f"expected 4 layers, header says {layer_count}")
    layers = []
    expect_in = INPUT_CHANNELS
    for k in range(layer_count):
        out_ch, in_ch, kh, kw = struct.unpack("<4I", take(16))
        want_k = 1 if k == 3 else 3
        if in_ch != expect_in:
            raise CorruptWeightsError(
                f"layer {k} expects {in_ch} input channels, chain provides {expect_in}"
            )
        if kh != want_k or kw != want_k or out_ch == 0 or out_ch > 4096:
            raise CorruptWeightsError(f"layer {k} has invalid shape {(out_ch, in_ch, kh, kw)}")
        n_kernel = out_ch * in_ch * kh * kw
        kernel = np.frombuffer(take(8 * n_kernel), dtype="<f8").reshape(out_ch, in_ch, kh, kw)
        bias = np.frombuffer(take(8 * out_ch), dtype="<f8")
        if not (np.all(np.isfinite(kernel)) and np.all(np.isfinite(bias))):
            raise CorruptWeightsError(f"layer {k} contains non-finite weights")
        layers.append(ConvLayer(kernel.astype(dtype), bias.astype(dtype)))
        expect_in = out_ch
    if layers[-1].kernel.shape[0] != 1:
        raise CorruptWeightsError("head layer must have a single output channel")
    if pos != len(view):
        raise CorruptWeightsError(f"{len(view) - pos} trailing bytes after weights")
    return EdgeNet(norm, layers=layers, dtype=dtype)


def save_weights_file(net: EdgeNet, path) -> None:
    from pathlib import Path

    Path(path).write_bytes(save_weights(net))


def load_weights_file(path, dtype: np.dtype = np.float32) -> EdgeNet:
    from pathlib import Path

    return load_weights(Path(path).read_bytes(), dtype=dtype)
