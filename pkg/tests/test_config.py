import dataclasses

import pytest

from eca.config import (
    EcaConfig,
    apply_overrides,
    config_default,
    dumps_config,
    load_config,
    loads_config,
    save_config,
)


def test_default_parameter_values():
    cfg = config_default()
    assert cfg.strip_count == 16
    assert cfg.strip_weighting == 8.0
    assert cfg.gradient_threshold == 20.0
    assert cfg.angle_threshold_deg == 30.0
    assert cfg.intensity_threshold == 25.0
    assert cfg.min_point_score == 0.03
    assert cfg.min_circle_score == 0.06
    assert cfg.edge_margin_px == 3
    assert cfg.inlier_distance_px == 3.0
    assert cfg.min_radius_frac == 0.1
    assert cfg.max_radius_frac == 0.8
    assert cfg.max_center_offset_frac == 0.2
    assert cfg.ransac_iterations == 3
    assert cfg.ransac_attempts == 32


def test_radius_bounds_ordered():
    cfg = config_default()
    assert cfg.min_radius_frac < cfg.max_radius_frac


def test_circle_score_threshold_normalised_by_strip_count():
    cfg = config_default()
    assert cfg.circle_score_threshold() == pytest.approx(0.06 * 16)
    absolute = dataclasses.replace(cfg, min_circle_score_absolute=True)
    assert absolute.circle_score_threshold() == pytest.approx(0.06)


def test_config_file_roundtrip_bit_exact(tmp_path):
    cfg = EcaConfig(
        strip_weighting=8.000000001,
        min_point_score=0.030000000000000002,
        gradient_threshold=19.999999999999996,
    )
    path = tmp_path / "eca.cfg"
    save_config(cfg, path)
    assert load_config(path) == cfg


def test_loads_config_partial_and_comments():
    cfg = loads_config("# comment\nstrip_count = 8\nmin_circle_score = 0.5  # inline\n")
    assert cfg.strip_count == 8
    assert cfg.min_circle_score == 0.5
    assert cfg.gradient_threshold == 20.0  # untouched default


@pytest.mark.parametrize(
    "text",
    ["strip_count 8", "not_a_field = 3", "strip_count = x"],
)
def test_loads_config_rejects_malformed(text):
    with pytest.raises(ValueError):
        loads_config(text)


def test_apply_overrides():
    cfg = apply_overrides(config_default(), ["strip_count=8", "min_circle_score_absolute=true"])
    assert cfg.strip_count == 8
    assert cfg.min_circle_score_absolute is True
    with pytest.raises(ValueError):
        apply_overrides(config_default(), ["strip_count"])


@pytest.mark.parametrize(
    "kwargs",
    [
        {"strip_count": 3},
        {"strip_weighting": 0.0},
        {"min_radius_frac": 0.9},
        {"gradient_threshold": -1.0},
        {"ransac_attempts": 0},
    ],
)
def test_invalid_configs_rejected(kwargs):
    with pytest.raises(ValueError):
        EcaConfig(**kwargs)


def test_dumps_config_lists_every_field():
    text = dumps_config(config_default())
    for field in dataclasses.fields(EcaConfig):
        assert f"{field.name} = " in text
