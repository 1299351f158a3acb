import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eca.strips import extract_strips, sigmoid_heights, strip_heights, validate_frame

# placement formula evaluated in 50-digit arithmetic before the build,
# rounded half-up, clamped to [3, H-4]:  H=1080, 16 strips, weighting 8
HEIGHTS_1080_16_8 = [25, 40, 65, 103, 160, 241, 346, 473, 607, 734, 839, 920, 977, 1015, 1040, 1055]


def test_frozen_heights_1080():
    assert strip_heights(1080, 16, 8.0) == HEIGHTS_1080_16_8


def test_middle_strip_at_half_height():
    # the middle of an odd strip count sits exactly at the sigmoid midpoint
    assert strip_heights(1000, 3, 8.0)[1] == 500


def test_symmetry_about_midframe():
    hs = strip_heights(1000, 16, 8.0)
    for i in range(16):
        assert hs[i] + hs[15 - i] == pytest.approx(1000, abs=1)


def test_spacing_denser_near_frame_edges():
    hs = strip_heights(1080, 16, 8.0)
    gaps = np.diff(hs)
    assert gaps[0] < gaps[len(gaps) // 2]
    assert gaps[-1] < gaps[len(gaps) // 2]


def test_clamped_to_window_margin():
    hs = strip_heights(40, 16, 8.0)
    assert min(hs) >= 3
    assert max(hs) <= 40 - 4


def test_deduplicates_rounding_collisions():
    hs = strip_heights(16, 16, 8.0)
    assert hs == sorted(set(hs))


@pytest.mark.parametrize("height,count,alpha", [(13, 16, 8.0), (100, 1, 8.0), (100, 16, 0.0)])
def test_rejects_bad_arguments(height, count, alpha):
    with pytest.raises(ValueError):
        strip_heights(height, count, alpha)


@given(
    height=st.integers(min_value=14, max_value=4000),
    count=st.integers(min_value=2, max_value=64),
    alpha=st.floats(min_value=0.01, max_value=32.0),
)
@settings(max_examples=200)
def test_heights_monotone(height, count, alpha):
    hs = strip_heights(height, count, alpha)
    assert all(a < b for a, b in zip(hs, hs[1:]))
    assert all(3 <= h <= height - 4 for h in hs)


@given(
    height=st.integers(min_value=14, max_value=100000),
    count=st.integers(min_value=2, max_value=64),
    alpha=st.floats(min_value=0.01, max_value=32.0),
)
@settings(max_examples=200)
def test_doubling_height_doubles_raw_heights(height, count, alpha):
    # the placement formula is linear in H, and *2 is exact in binary
    assert np.array_equal(
        sigmoid_heights(2 * height, count, alpha), 2.0 * sigmoid_heights(height, count, alpha)
    )


def test_vanishing_weighting_converges_to_midframe():
    hs = strip_heights(1000, 16, 1e-6)
    assert all(abs(h - 500) <= 1 for h in hs)


def _frame(width=100, height=100, seed=0):
    return np.random.default_rng(seed).integers(0, 256, (height, width, 3), dtype=np.uint8)


def test_extract_single_strip_rows():
    frame = _frame()
    windows = extract_strips(frame, [50])
    assert windows.shape == (1, 7, 100, 3)
    assert np.array_equal(windows[0], frame[47:54])


def test_extract_lower_clamp_boundary():
    frame = _frame()
    windows = extract_strips(frame, [3])
    assert np.array_equal(windows[0], frame[0:7])


def test_extract_center_row_matches_frame():
    frame = _frame(seed=3)
    heights = [10, 47, 80]
    windows = extract_strips(frame, heights)
    rng = np.random.default_rng(1)
    for k, h in enumerate(heights):
        for x in rng.integers(0, 100, size=16):
            assert np.array_equal(windows[k, 3, x], frame[h, x])


def test_extract_is_a_copy():
    frame = _frame()
    original = frame.copy()
    windows = extract_strips(frame, [20])
    windows += 1
    assert np.array_equal(frame, original)


def test_extract_rejects_out_of_range_heights():
    with pytest.raises(ValueError):
        extract_strips(_frame(), [2])
    with pytest.raises(ValueError):
        extract_strips(_frame(), [97])


@pytest.mark.parametrize(
    "shape,dtype",
    [((100, 100), np.uint8), ((100, 100, 3), np.float32), ((10, 4, 3), np.uint8)],
)
def test_validate_frame_rejects(shape, dtype):
    with pytest.raises(ValueError):
        validate_frame(np.zeros(shape, dtype=dtype))
