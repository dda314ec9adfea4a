"""Pipeline configuration: defaults < config file < command-line flags."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .objfilter import MOVABLE_COCO, FilterConfig
from .predictor import CLAMPED, LITERAL, TemporalConfig
from .scenegraph import MODES, THREE_TIER

ANCHOR_SOURCES = ("matched", "all")
_EXECUTION_ONLY = {"workers"}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    margin_px: float = 25.0
    beta_s: float = 0.3
    alpha: float = 2.0
    wl_iterations: int = 50
    tau: float = 0.5
    min_gap: int = 30
    mode: str = THREE_TIER
    temporal_mode: str = CLAMPED
    denylist: tuple[str, ...] = tuple(sorted(MOVABLE_COCO))
    max_area_fraction: float = 0.5
    overlap_iou_threshold: float = 0.3
    match_tolerance: float = 0.4
    anchor_objects: str = "matched"
    tolerance: int = 5
    vocab_size: int = 64
    hidden_layers: tuple[int, ...] = (16, 16)
    epochs: int = 200
    lr: float = 0.01
    batch_size: int = 32
    seed: int = 42
    workers: int = 1

    def __post_init__(self):
        checks = [
            (self.margin_px >= 0, "margin_px must be >= 0"),
            (0.0 < self.beta_s < 1.0, "beta_s must be in (0, 1)"),
            (0.0 < self.alpha < 100.0, "alpha must be in (0, 100)"),
            (self.wl_iterations >= 0, "wl_iterations must be >= 0"),
            (self.min_gap >= 1, "min_gap must be >= 1"),
            (self.mode in MODES, f"mode must be one of {', '.join(MODES)}"),
            (self.temporal_mode in (LITERAL, CLAMPED), "temporal_mode must be literal or clamped"),
            (0.0 < self.max_area_fraction <= 1.0, "max_area_fraction must be in (0, 1]"),
            (0.0 <= self.overlap_iou_threshold <= 1.0, "overlap_iou_threshold must be in [0, 1]"),
            (0.0 <= self.match_tolerance <= 1.0, "match_tolerance must be in [0, 1]"),
            (self.anchor_objects in ANCHOR_SOURCES, "anchor_objects must be matched or all"),
            (self.tolerance >= 0, "tolerance must be >= 0"),
            (self.vocab_size >= 1, "vocab_size must be >= 1"),
            (all(n >= 1 for n in self.hidden_layers), "hidden_layers entries must be >= 1"),
            (self.epochs >= 0, "epochs must be >= 0"),
            (self.lr >= 0, "lr must be >= 0"),
            (self.batch_size >= 1, "batch_size must be >= 1"),
            (self.workers >= 1, "workers must be >= 1"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)

    @property
    def filter(self) -> FilterConfig:
        return FilterConfig(frozenset(self.denylist), self.max_area_fraction, self.overlap_iou_threshold)

    @property
    def temporal(self) -> TemporalConfig:
        return TemporalConfig(self.beta_s, self.alpha, self.temporal_mode, self.min_gap)

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (5, *self.hidden_layers, 1)

    def replace(self, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, **changes)

    def override(self, values: Mapping[str, Any]) -> "PipelineConfig":
        """Apply string or typed overrides, ignoring ``None`` values."""
        changes = {}
        for key, value in values.items():
            if value is None:
                continue
            if key not in _FIELD_TYPES:
                raise ConfigError(f"unknown config key {key!r}")
            changes[key] = _coerce(key, value)
        return self.replace(**changes)

    def snapshot(self) -> str:
        """Effective settings as ``key = value`` lines.

        ``workers`` is left out: it never changes results, and snapshots must
        be byte-identical across worker counts.
        """
        lines = []
        for f in dataclasses.fields(self):
            if f.name in _EXECUTION_ONLY:
                continue
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_file(cls, path: str | Path, base: "PipelineConfig | None" = None) -> "PipelineConfig":
        return (base or cls()).override(parse_config_text(Path(path).read_text(), str(path)))


_FIELD_TYPES = {
    "margin_px": float, "beta_s": float, "alpha": float, "wl_iterations": int, "tau": float,
    "min_gap": int, "mode": str, "temporal_mode": str, "denylist": "strs",
    "max_area_fraction": float, "overlap_iou_threshold": float, "match_tolerance": float,
    "anchor_objects": str, "tolerance": int, "vocab_size": int, "hidden_layers": "ints",
    "epochs": int, "lr": float, "batch_size": int, "seed": int, "workers": int,
}


def _coerce(key: str, value: Any):
    kind = _FIELD_TYPES[key]
    try:
        if kind == "strs":
            items = value.split(",") if isinstance(value, str) else value
            return tuple(sorted(s.strip() for s in items if s.strip()))
        if kind == "ints":
            items = value.split(",") if isinstance(value, str) else value
            return tuple(int(s) for s in items if str(s).strip())
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid value {value!r} for {key}") from exc


def parse_config_text(text: str, where: str = "config") -> dict[str, str]:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{where} line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{where} line {lineno}: unknown key {key!r}")
        values[key] = value
    return values
