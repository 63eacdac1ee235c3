"""Flat key/value run configuration with environment overrides.

Precedence: config file > environment (SOLARSDE_<KEY> with dots as
underscores) > built-in defaults. The effective configuration has a stable
hash that every output artifact embeds, so runs are attributable and
reproducible.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field

from .errors import ConfigError

_REQUIRED = object()

# key -> (type tag, default); type tags: float, int, str
SCHEMA: dict[str, tuple[str, object]] = {
    "site.latitude_deg": ("float", _REQUIRED),
    "site.longitude_deg": ("float", _REQUIRED),
    "site.gmt_offset_hours": ("float", _REQUIRED),
    "site.solar_constant": ("float", 1353.0),
    "site.panel_area_m2": ("str", "auto"),  # square meters, or 'auto' with capacity
    "data.production_path": ("str", _REQUIRED),
    "data.forecast_path": ("str", _REQUIRED),
    "data.exclusion_path": ("str", ""),
    "data.capacity_mw": ("float", _REQUIRED),
    "data.grid_minutes": ("float", 10.0),
    "model.surrogate": ("str", "beta"),
    "model.eps_init": ("float", 0.07),
    "model.tol_rel_mse": ("float", 0.1),
    "model.max_iterations": ("int", 50),
    "model.max_evals": ("int", 500),
    "run.seed": ("int", 0),
    "run.workers": ("int", 1),
    "run.output_dir": ("str", "."),
}

ENV_PREFIX = "SOLARSDE_"


@dataclass
class RunConfig:
    """Effective configuration: merged values plus typed access."""

    values: dict[str, str] = field(default_factory=dict)

    def _raw(self, key: str):
        if key not in SCHEMA:
            raise ConfigError(f"unknown config field {key!r}")
        if key in self.values:
            return self.values[key]
        default = SCHEMA[key][1]
        if default is _REQUIRED:
            raise ConfigError(f"missing config field {key!r}")
        return default

    def get(self, key: str):
        raw = self._raw(key)
        tag = SCHEMA[key][0]
        try:
            if tag == "float":
                return float(raw)
            if tag == "int":
                return int(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"config field {key!r}: bad value {raw!r}") from exc
        return str(raw)

    def has(self, key: str) -> bool:
        try:
            self._raw(key)
        except ConfigError:
            return False
        return True

    def effective(self) -> dict[str, str]:
        """All known keys that resolve to a value, canonically stringified."""
        out = {}
        for key in sorted(SCHEMA):
            if self.has(key):
                out[key] = str(self.get(key))
        return out

    @property
    def hash(self) -> str:
        text = "\n".join(f"{k} = {v}" for k, v in self.effective().items())
        return hashlib.sha256(text.encode()).hexdigest()[:12]


def _env_key(key: str) -> str:
    return ENV_PREFIX + key.replace(".", "_").upper()


def parse_config_text(text: str) -> dict[str, str]:
    """Parse `key = value` lines; '#' starts a comment, blanks ignored."""
    out: dict[str, str] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"config line {line_no}: expected 'key = value'")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"config line {line_no}: unknown field {key!r}")
        out[key] = value
    return out


def load_config(path: str | None = None, environ=None) -> RunConfig:
    """Merge defaults, environment overrides, and (optionally) a config file."""
    environ = os.environ if environ is None else environ
    values: dict[str, str] = {}
    for key in SCHEMA:
        env_val = environ.get(_env_key(key))
        if env_val is not None:
            values[key] = env_val
    if path is not None:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        values.update(parse_config_text(text))
    return RunConfig(values=values)
