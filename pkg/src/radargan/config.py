"""Plain-text key=value configuration files (``#`` comments, blank lines ok).

Keys carry units in their names (dx_mm, standoff_cm, source_f0_ghz).
Unknown keys are rejected so typos fail loudly.
"""

from __future__ import annotations

from pathlib import Path

from .errors import ConfigError
from .fdtd import SimConfig

SIM_SCHEMA = {
    "dx_mm": float,
    "courant": float,
    "record_len": int,
    "record_every": int,
    "standoff_cm": float,
    "source_f0_ghz": float,
    "source_band_ghz": float,
}


def parse_kv_file(path, schema: dict) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    values = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in schema:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = schema[key](value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return values


def load_sim_config(path=None, paper_scale: bool = False) -> SimConfig:
    base = SimConfig.paper_scale() if paper_scale else SimConfig.desk_scale()
    if path is None:
        return base
    overrides = parse_kv_file(path, SIM_SCHEMA)
    cfg = SimConfig(**{**_as_dict(base), **overrides})
    cfg.validate()
    return cfg


def _as_dict(cfg: SimConfig) -> dict:
    return {"dx_mm": cfg.dx_mm, "courant": cfg.courant, "record_len": cfg.record_len,
            "record_every": cfg.record_every, "standoff_cm": cfg.standoff_cm,
            "source_f0_ghz": cfg.source_f0_ghz, "source_band_ghz": cfg.source_band_ghz}
