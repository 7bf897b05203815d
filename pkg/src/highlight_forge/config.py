"""Pipeline configuration: defaults, the key=value config file, flag overrides.

Precedence is defaults < config file < command-line flags. The config file
is flat text with dotted keys, one ``key=value`` per line; ``#`` starts a
comment:

    backend=fixture
    confidence=0.9
    planner.lead_s=5
    paths.out_dir=highlights_out
"""
from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field

from .errors import ConfigError
from .planning import PlannerConfig

CONFIG_ENV_VAR = "HIGHLIGHT_FORGE_CONFIG"


@dataclass
class PipelineConfig:
    backend: str = "fixture"
    confidence: float = 0.9
    interval_s: int = 2
    workers: int = 1
    tolerance_s: int = 10
    duration_s: int | None = None
    overlay_margin_px: int = 10
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    video: str | None = None
    workdir: str | None = None
    out_dir: str = "highlights_out"
    fixture_table: str | None = None
    sidecar: str | None = None


# config-file key -> (attribute path, converter)
_SCHEMA: dict[str, tuple[str, type]] = {
    "backend": ("backend", str),
    "confidence": ("confidence", float),
    "interval": ("interval_s", int),
    "workers": ("workers", int),
    "tolerance": ("tolerance_s", int),
    "duration": ("duration_s", int),
    "render.margin_px": ("overlay_margin_px", int),
    "planner.lead_s": ("planner.lead_s", int),
    "planner.tail_s": ("planner.tail_s", int),
    "planner.merge_gap_s": ("planner.merge_gap_s", int),
    "paths.video": ("video", str),
    "paths.workdir": ("workdir", str),
    "paths.out_dir": ("out_dir", str),
    "paths.fixture_table": ("fixture_table", str),
    "paths.sidecar": ("sidecar", str),
}


def parse_config_text(text: str) -> dict[str, object]:
    """Parse config file text into attribute-path keyed values."""
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        attr, convert = _SCHEMA[key]
        try:
            values[attr] = convert(value)
        except ValueError:
            raise ConfigError(
                f"line {lineno}: bad value {value!r} for {key} "
                f"(expected {convert.__name__})"
            ) from None
    return values


def _apply(cfg: PipelineConfig, values: dict[str, object]) -> PipelineConfig:
    planner_updates = {
        attr.split(".", 1)[1]: value
        for attr, value in values.items()
        if attr.startswith("planner.")
    }
    if planner_updates:
        try:
            cfg.planner = dataclasses.replace(cfg.planner, **planner_updates)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    for attr, value in values.items():
        if not attr.startswith("planner."):
            setattr(cfg, attr, value)
    return cfg


def _validate(cfg: PipelineConfig) -> PipelineConfig:
    if not (0.0 <= cfg.confidence <= 1.0):
        raise ConfigError(f"confidence must lie in [0, 1], got {cfg.confidence}")
    if cfg.interval_s < 1:
        raise ConfigError(f"interval must be >= 1 second, got {cfg.interval_s}")
    if cfg.workers < 1:
        raise ConfigError(f"workers must be >= 1, got {cfg.workers}")
    if cfg.tolerance_s < 0:
        raise ConfigError(f"tolerance must be >= 0, got {cfg.tolerance_s}")
    if cfg.duration_s is not None and cfg.duration_s < 0:
        raise ConfigError(f"duration must be >= 0, got {cfg.duration_s}")
    return cfg


def load_config(
    config_path: str | None = None, overrides: dict[str, object] | None = None
) -> PipelineConfig:
    """Build the effective config from defaults, an optional file, and flags.

    When no path is given, the HIGHLIGHT_FORGE_CONFIG environment variable
    is consulted. Flag overrides use the same attribute paths the file
    schema maps to and always win.
    """
    cfg = PipelineConfig()
    path = config_path or os.environ.get(CONFIG_ENV_VAR)
    if path:
        if not os.path.isfile(path):
            raise ConfigError(f"config file not found: {path}")
        with open(path, encoding="utf-8") as fh:
            _apply(cfg, parse_config_text(fh.read()))
    if overrides:
        _apply(cfg, {k: v for k, v in overrides.items() if v is not None})
    return _validate(cfg)
