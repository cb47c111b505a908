"""Line-oriented run configuration: ``key = value`` with ``#`` comments."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

from .errors import ConfigError

COMMANDS = ("curves", "widths", "schmidt", "sweep", "crystal", "reproduce")
GEOMETRIES = ("perp", "parallel", "custom")
SWEEP_PARAMETERS = ("np_eff", "alpha", "L")


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class RunConfig:
    crystal: str = "LiIO3"
    lambda_nm: float = 325.0
    L_cm: float = 1.5
    alpha_mrad: float = 4.114
    geometry: str = "parallel"
    np_eff: float | None = None
    from_dispersion: bool = False
    output_dir: str = "out"
    workers: int = 1
    curve_points: int = 2001
    schmidt_points: int = 1024
    sweep_parameter: str | None = None
    sweep_start: float | None = None
    sweep_stop: float | None = None
    sweep_steps: int | None = None

    @property
    def alpha(self) -> float:
        return self.alpha_mrad * 1e-3


_TYPES = {
    "crystal": str,
    "lambda_nm": float,
    "L_cm": float,
    "alpha_mrad": float,
    "geometry": str,
    "np_eff": float,
    "from_dispersion": _bool,
    "output_dir": str,
    "workers": int,
    "curve_points": int,
    "schmidt_points": int,
    "sweep_parameter": str,
    "sweep_start": float,
    "sweep_stop": float,
    "sweep_steps": int,
}
KEYS = tuple(f.name for f in fields(RunConfig))
_POSITIVE = ("lambda_nm", "L_cm", "alpha_mrad", "workers", "curve_points", "schmidt_points")


def _convert(key, raw, where):
    if key not in _TYPES:
        raise ConfigError(f"{where}: unknown key {key!r}")
    try:
        value = _TYPES[key](raw.strip() if isinstance(raw, str) else raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: malformed value {raw!r} for {key!r}") from None
    if isinstance(value, float) and not math.isfinite(value):
        raise ConfigError(f"{where}: {key} must be finite")
    return value


def parse_config(text: str = "", overrides: dict | None = None, origin: str = "<config>") -> RunConfig:
    """Parse a config file and apply flag overrides on top.

    ``overrides`` maps key to a raw value (string or number); entries set to
    ``None`` are ignored. Errors name the offending line or flag.
    """
    values: dict[str, object] = {}
    source: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        where = f"{origin}:{lineno}"
        key, sep, val = body.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"{where}: expected 'key = value', got {raw.strip()!r}")
        if key in values:
            raise ConfigError(f"{where}: duplicate key {key!r}")
        values[key] = _convert(key, val, where)
        source[key] = where
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        where = f"flag --{key.replace('_', '-')}"
        values[key] = _convert(key, val, where)
        source[key] = where
    return validate(RunConfig(**values), source)


def validate(cfg: RunConfig, source: dict | None = None) -> RunConfig:
    source = source or {}

    def where(key):
        return source.get(key, key)

    for key in _POSITIVE:
        if not getattr(cfg, key) > 0:
            raise ConfigError(f"{where(key)}: {key} must be positive, got {getattr(cfg, key)}")
    if cfg.geometry not in GEOMETRIES:
        raise ConfigError(f"{where('geometry')}: geometry must be one of {GEOMETRIES}")
    if cfg.np_eff is not None and cfg.geometry != "custom":
        if "geometry" in source:
            raise ConfigError(
                f"{where('np_eff')}: np_eff conflicts with geometry preset {cfg.geometry!r}; "
                "use geometry = custom"
            )
        cfg = replace(cfg, geometry="custom")
    if cfg.geometry == "custom" and cfg.np_eff is None:
        raise ConfigError(f"{where('geometry')}: missing required key 'np_eff' for custom geometry")
    if cfg.sweep_parameter is not None and cfg.sweep_parameter not in SWEEP_PARAMETERS:
        raise ConfigError(f"{where('sweep_parameter')}: sweep_parameter must be one of {SWEEP_PARAMETERS}")
    if cfg.sweep_steps is not None and cfg.sweep_steps < 2:
        raise ConfigError(f"{where('sweep_steps')}: sweep_steps must be >= 2")
    return cfg


def require_sweep(cfg: RunConfig) -> None:
    missing = [k for k in ("sweep_parameter", "sweep_start", "sweep_stop", "sweep_steps") if getattr(cfg, k) is None]
    if missing:
        raise ConfigError(f"missing required key(s) for sweep: {', '.join(missing)}")


def format_config(cfg: RunConfig) -> str:
    """Serialise so that ``parse_config(format_config(c)) == c``."""
    lines = []
    for key in KEYS:
        value = getattr(cfg, key)
        if value is None:
            continue
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"
