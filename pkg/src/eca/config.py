"""Pipeline configuration: every tunable with its published default value.

Configs serialize to a flat ``name = value`` text file (``#`` starts a comment)
and round-trip bit-exactly; floats are written with ``repr``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True, slots=True)
class EcaConfig:
    """Tunables of the estimation pipeline.

    ``min_radius_frac``, ``max_radius_frac`` and ``max_center_offset_frac``
    are expressed as multiples of the image width.  ``min_circle_score`` is a
    per-strip value by default: a fit is accepted when its inlier score sum
    reaches ``min_circle_score * strip_count`` (set
    ``min_circle_score_absolute`` to gate on the raw sum instead).
    """

    strip_count: int = 16
    strip_weighting: float = 8.0  # sigmoid sharpness pushing strips to top/bottom
    gradient_threshold: float = 20.0
    angle_threshold_deg: float = 30.0
    intensity_threshold: float = 25.0
    edge_margin_px: int = 3
    min_point_score: float = 0.03
    inlier_distance_px: float = 3.0
    min_circle_score: float = 0.06
    min_circle_score_absolute: bool = False
    min_radius_frac: float = 0.1
    max_radius_frac: float = 0.8
    max_center_offset_frac: float = 0.2
    ransac_attempts: int = 32
    ransac_iterations: int = 3

    def __post_init__(self) -> None:
        if self.strip_count < 4:
            raise ValueError(f"strip_count must be >= 4, got {self.strip_count}")
        if self.strip_weighting <= 0:
            raise ValueError(f"strip_weighting must be positive, got {self.strip_weighting}")
        for name in (
            "gradient_threshold",
            "angle_threshold_deg",
            "intensity_threshold",
            "min_point_score",
            "inlier_distance_px",
            "min_circle_score",
            "min_radius_frac",
            "max_radius_frac",
            "max_center_offset_frac",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.edge_margin_px < 0:
            raise ValueError(f"edge_margin_px must be >= 0, got {self.edge_margin_px}")
        if self.min_radius_frac >= self.max_radius_frac:
            raise ValueError(
                f"min_radius_frac must be < max_radius_frac, "
                f"got {self.min_radius_frac} >= {self.max_radius_frac}"
            )
        if self.ransac_attempts < 1 or self.ransac_iterations < 1:
            raise ValueError("ransac_attempts and ransac_iterations must be >= 1")

    def circle_score_threshold(self) -> float:
        """Absolute inlier-score sum required to accept a fitted circle."""
        if self.min_circle_score_absolute:
            return self.min_circle_score
        return self.min_circle_score * self.strip_count


def config_default() -> EcaConfig:
    """The published default configuration."""
    return EcaConfig()


_FIELDS = {f.name: f.type for f in dataclasses.fields(EcaConfig)}


def _format_value(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value)


def _parse_value(name: str, text: str) -> object:
    if name not in _FIELDS:
        raise ValueError(f"unknown config field {name!r}")
    kind = _FIELDS[name]
    text = text.strip()
    if kind == "bool":
        if text.lower() in ("true", "1", "yes"):
            return True
        if text.lower() in ("false", "0", "no"):
            return False
        raise ValueError(f"bad boolean for {name}: {text!r}")
    if kind == "int":
        return int(text)
    return float(text)


def dumps_config(cfg: EcaConfig) -> str:
    lines = ["# content-area estimation parameters"]
    for f in dataclasses.fields(EcaConfig):
        lines.append(f"{f.name} = {_format_value(getattr(cfg, f.name))}")
    return "\n".join(lines) + "\n"


def loads_config(text: str, base: EcaConfig | None = None) -> EcaConfig:
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'name = value', got {raw!r}")
        name, _, value = line.partition("=")
        name = name.strip()
        try:
            values[name] = _parse_value(name, value)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return dataclasses.replace(base or config_default(), **values)


def save_config(cfg: EcaConfig, path: str | Path) -> None:
    Path(path).write_text(dumps_config(cfg), encoding="utf-8")


def load_config(path: str | Path, base: EcaConfig | None = None) -> EcaConfig:
    return loads_config(Path(path).read_text(encoding="utf-8"), base=base)


def apply_overrides(cfg: EcaConfig, overrides: list[str]) -> EcaConfig:
    """Apply ``name=value`` override strings (CLI ``--set``)."""
    values: dict[str, object] = {}
    for item in overrides:
        if "=" not in item:
            raise ValueError(f"override must look like name=value, got {item!r}")
        name, _, value = item.partition("=")
        values[name.strip()] = _parse_value(name.strip(), value)
    return dataclasses.replace(cfg, **values)
