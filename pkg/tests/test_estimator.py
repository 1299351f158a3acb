import numpy as np
import pytest

from eca.config import config_default
from eca.dataset import SyntheticSpec, benchmark_spec, render_synthetic
from eca.estimator import (
    HANDCRAFTED,
    FrameError,
    Learned,
    estimate,
    estimate_batch,
)
from eca.edgenet import ChannelStats, EdgeNet
from eca.geometry import Circle, CircularArea, FullFrame


def test_clean_disk_recovered(clean_frame):
    frame, truth = clean_frame
    area = estimate(frame)
    assert isinstance(area, CircularArea)
    assert abs(area.circle.cx - truth.cx) <= 3
    assert abs(area.circle.cy - truth.cy) <= 3
    assert abs(area.circle.r - truth.r) <= 3
    assert area.score >= config_default().circle_score_threshold()


def test_centered_disk_at_045_width():
    spec = SyntheticSpec(width=640, height=480, circle=Circle(319.5, 239.5, 0.45 * 640))
    frame, _ = render_synthetic(spec, rng_seed=8)
    area = estimate(frame)
    assert isinstance(area, CircularArea)
    assert abs(area.circle.cx - 319.5) <= 3
    assert abs(area.circle.cy - 239.5) <= 3
    assert abs(area.circle.r - 0.45 * 640) <= 3


def test_uniform_gray_frame_is_full():
    frame = np.full((480, 640, 3), 128, dtype=np.uint8)
    assert estimate(frame) == FullFrame()


def test_oversized_disk_rejected_to_full_frame():
    # r = 0.95 W cannot pass the radius gate, whatever the fit finds
    spec = SyntheticSpec(
        width=640,
        height=480,
        circle=Circle(319.5, 239.5, 0.95 * 640),
        adversarial=True,
    )
    frame, _ = render_synthetic(spec, rng_seed=5)
    assert estimate(frame) == FullFrame()


def test_estimate_rejects_malformed_frames():
    with pytest.raises(ValueError):
        estimate(np.zeros((10, 10, 3), dtype=np.uint8))
    with pytest.raises(ValueError):
        estimate(np.zeros((100, 100), dtype=np.uint8))


def test_estimate_deterministic(clean_frame):
    frame, _ = clean_frame
    assert estimate(frame, seed=5) == estimate(frame, seed=5)


def test_flip_symmetry_within_one_pixel(clean_frame):
    frame, _ = clean_frame
    width = frame.shape[1]
    a = estimate(frame)
    b = estimate(np.ascontiguousarray(frame[:, ::-1, :]))
    assert isinstance(a, CircularArea) and isinstance(b, CircularArea)
    assert b.circle.cx == pytest.approx(width - a.circle.cx, abs=1.0)
    assert b.circle.cy == pytest.approx(a.circle.cy, abs=1.0)
    assert b.circle.r == pytest.approx(a.circle.r, abs=1.0)


def test_batch_matches_singles(clean_frame):
    frame, _ = clean_frame
    rng = np.random.default_rng(0)
    frames = [frame, np.full((480, 640, 3), 90, dtype=np.uint8)]
    frames.append(render_synthetic(benchmark_spec("dark", rng, 640, 480), 3)[0])
    batch = estimate_batch(frames, seed=2)
    assert batch == [estimate(f, HANDCRAFTED, None, seed=2) for f in frames]


def test_batch_empty():
    assert estimate_batch([]) == []


def test_batch_isolates_per_frame_errors(clean_frame):
    frame, _ = clean_frame
    bad = np.zeros((4, 4, 3), dtype=np.uint8)
    out = estimate_batch([frame, bad, frame])
    assert isinstance(out[0], CircularArea)
    assert isinstance(out[1], FrameError) and out[1].index == 1
    assert out[2] == out[0]


def test_batch_threads_match_serial(clean_frame):
    frame, _ = clean_frame
    frames = [frame] * 4
    assert estimate_batch(frames, threads=2) == estimate_batch(frames, threads=1)


def test_learned_variant_untrained_is_total(clean_frame):
    # an untrained (zero) net scores every column 0.5; candidates collapse to
    # the valid-convolution borders and only the circle-stage logic filters
    # them.  estimate must stay a total function whatever that fit yields.
    frame, _ = clean_frame
    norm = ChannelStats(np.array([100.0] * 3), np.array([50.0] * 3))
    net = EdgeNet(norm, seed=0)
    for layer in net.layers:
        layer.kernel[:] = 0.0
        layer.bias[:] = 0.0
    area = estimate(frame, Learned(net))
    assert isinstance(area, (CircularArea, FullFrame))
