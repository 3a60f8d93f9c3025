"""Pipeline configuration and the flat ``key=value`` config file format."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Optional

from .bilateral import BilateralParams
from .inpaint import EPSILON_D, PatchSpec
from .preproc import CannyParams, HistogramClusterParams

GUIDE_MODES = ("depth", "rgb-gray")
EDGE_SOURCES = ("depth", "guide")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    """Every tunable of the pipeline. ``None`` means "derive from the image"."""

    bins: int = 32
    canny: CannyParams = field(default_factory=CannyParams)
    bilateral: BilateralParams = field(default_factory=BilateralParams)
    patch: PatchSpec = field(default_factory=PatchSpec)
    alpha: Optional[float] = None
    epsilon_d: float = EPSILON_D
    min_region_px: int = 9
    sentinel: float = 0.0
    guide_mode: str = "depth"
    edge_source: str = "depth"
    search_radius: Optional[int] = None

    def __post_init__(self):
        HistogramClusterParams(self.bins)
        if self.alpha is not None and not self.alpha > 0:
            raise ValueError("alpha must be > 0")
        if not self.epsilon_d > 0:
            raise ValueError("epsilon_d must be > 0")
        if self.min_region_px < 0:
            raise ValueError("min_region_px must be >= 0")
        if self.guide_mode not in GUIDE_MODES:
            raise ValueError(f"guide_mode must be one of {GUIDE_MODES}")
        if self.edge_source not in EDGE_SOURCES:
            raise ValueError(f"edge_source must be one of {EDGE_SOURCES}")
        if self.search_radius is not None and self.search_radius < 1:
            raise ValueError("search_radius must be >= 1")


def _opt(parse):
    def inner(text: str):
        return None if text.strip().lower() in ("auto", "none", "") else parse(text)
    return inner


def _int(text: str) -> int:
    value = float(text)
    if value != int(value):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(value)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _fmt(value) -> str:
    if value is None:
        return "auto"
    if isinstance(value, bool):
        return "true" if value else "false"
    return repr(value) if isinstance(value, float) else str(value)


# key -> (section or None, attribute, parser)
KEYS = {
    "bins": (None, "bins", _int),
    "canny.sigma": ("canny", "gaussian_sigma", float),
    "canny.low": ("canny", "low_threshold", float),
    "canny.high": ("canny", "high_threshold", float),
    "canny.relative": ("canny", "relative", _bool),
    "bilateral.sigma_s": ("bilateral", "sigma_s", float),
    "bilateral.sigma_r": ("bilateral", "sigma_r", _opt(float)),
    "bilateral.radius": ("bilateral", "radius", _opt(_int)),
    "bilateral.edge_skip_dist": ("bilateral", "edge_skip_dist", _int),
    "patch.size": ("patch", "size", _int),
    "alpha": (None, "alpha", _opt(float)),
    "epsilon_d": (None, "epsilon_d", float),
    "min_region_px": (None, "min_region_px", _int),
    "sentinel": (None, "sentinel", float),
    "guide_mode": (None, "guide_mode", str.strip),
    "edge_source": (None, "edge_source", str.strip),
    "search_radius": (None, "search_radius", _opt(_int)),
}


def to_flat(config: PipelineConfig) -> dict[str, str]:
    out = {}
    for key, (section, attr, _) in KEYS.items():
        obj = getattr(config, section) if section else config
        out[key] = _fmt(getattr(obj, attr))
    return out


def from_flat(values: Mapping[str, str], base: PipelineConfig = PipelineConfig()) -> PipelineConfig:
    """Apply string settings on top of ``base``; errors name the offending key."""
    unknown = sorted(set(values) - set(KEYS))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    parsed = {}
    for key, text in values.items():
        try:
            parsed[key] = KEYS[key][2](text)
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from None
    try:
        return _apply(base, parsed)
    except ValueError as exc:
        error = exc
    # name the field at fault when a single setting is invalid on its own
    for key, value in parsed.items():
        try:
            _apply(base, {key: value})
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from None
    raise ConfigError(f"{', '.join(sorted(parsed))}: {error}")


def _apply(base: PipelineConfig, parsed: Mapping[str, object]) -> PipelineConfig:
    top: dict = {}
    nested: dict = {"canny": {}, "bilateral": {}, "patch": {}}
    for key, value in parsed.items():
        section, attr, _ = KEYS[key]
        (nested[section] if section else top)[attr] = value
    for section, changes in nested.items():
        if changes:
            top[section] = replace(getattr(base, section), **changes)
    return replace(base, **top)


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown config key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = value
    return values


def load_config(path=None, overrides: Optional[Mapping[str, str]] = None) -> PipelineConfig:
    """Defaults, then the file at ``path`` (if any), then ``overrides``."""
    values: dict[str, str] = {}
    if path is not None:
        p = Path(path)
        values.update(parse_config_text(p.read_text(encoding="utf-8"), str(p)))
    if overrides:
        values.update(overrides)
    return from_flat(values)


def dump_config(config: PipelineConfig) -> str:
    return "".join(f"{k}={v}\n" for k, v in to_flat(config).items())


def config_hash(config: PipelineConfig) -> str:
    return hashlib.sha256(dump_config(config).encode("utf-8")).hexdigest()[:16]
