"""Runtime settings.

Precedence, lowest to highest: built-in defaults, JSON config file (path
from CONCEPTMCQ_CONFIG or an explicit argument), CONCEPTMCQ_* environment
variables, explicit overrides (CLI flags).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any

GENERATION_TEMPERATURE = 0.75
DETERMINISTIC_TEMPERATURE = 0.0


@dataclass(frozen=True)
class Settings:
    base_url: str = "http://localhost:8000/v1"
    model: str = "stub-model"
    api_key: str = ""
    timeout_s: float = 60.0
    max_retries: int = 3
    backoff_s: float = 0.5
    generation_temperature: float = GENERATION_TEMPERATURE
    deterministic_temperature: float = DETERMINISTIC_TEMPERATURE
    max_attempts: int = 2
    allow_any_temperature: bool = False

    def allowed_temperatures(self) -> frozenset[float]:
        return frozenset({self.generation_temperature, self.deterministic_temperature})


_ENV_PREFIX = "CONCEPTMCQ_"

_FIELD_TYPES = {f.name: f.type for f in fields(Settings)}


def _coerce(name: str, raw: str) -> Any:
    kind = _FIELD_TYPES[name]
    if kind in ("float", float):
        return float(raw)
    if kind in ("int", int):
        return int(raw)
    if kind in ("bool", bool):
        return raw.strip().lower() in ("1", "true", "yes", "on")
    return raw


class ConfigError(ValueError):
    """Bad config file or setting value."""


def load_settings(
    config_path: "str | Path | None" = None,
    overrides: "dict[str, Any] | None" = None,
    env: "dict[str, str] | None" = None,
) -> Settings:
    """Resolve settings from defaults, file, environment, and overrides."""
    env = os.environ if env is None else env
    settings = Settings()

    path = config_path or env.get(_ENV_PREFIX + "CONFIG")
    if path:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        try:
            data = json.loads(p.read_text())
        except ValueError as exc:
            raise ConfigError(f"config file {p} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config file {p} must contain a JSON object")
        unknown = set(data) - set(_FIELD_TYPES)
        if unknown:
            raise ConfigError(f"unknown settings in {p}: {', '.join(sorted(unknown))}")
        settings = replace(settings, **data)

    env_updates = {}
    for name in _FIELD_TYPES:
        var = _ENV_PREFIX + name.upper()
        if var in env:
            try:
                env_updates[name] = _coerce(name, env[var])
            except ValueError as exc:
                raise ConfigError(f"bad value for {var}: {env[var]!r} ({exc})") from exc
    if env_updates:
        settings = replace(settings, **env_updates)

    if overrides:
        clean = {k: v for k, v in overrides.items() if v is not None}
        unknown = set(clean) - set(_FIELD_TYPES)
        if unknown:
            raise ConfigError(f"unknown settings: {', '.join(sorted(unknown))}")
        if clean:
            settings = replace(settings, **clean)

    if settings.max_retries < 0:
        raise ConfigError("max_retries must be >= 0")
    if settings.max_attempts < 1:
        raise ConfigError("max_attempts must be >= 1")
    if settings.timeout_s <= 0:
        raise ConfigError("timeout_s must be positive")
    return settings
