"""Scenario configuration: defaults, flat key-value file parsing, validation.

Config files are flat ``key = value`` text. Blank lines and ``#`` comments are
ignored; an empty file yields all defaults. Per-cell quantities accept either
a scalar (applied to every cell) or a comma-separated list of length C.
Unknown keys are rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .errors import ConfigFileError, ConfigParseError, ConfigValidationError

ALGORITHM_NAMES = ("proposed", "saddle", "fdzf")


@dataclass
class ScenarioConfig:
    # topology
    cells: int = 3
    cell_radius_m: float = 500.0
    antennas_per_cell: int = 32
    num_sps: int = 4
    users_per_sp: int = 2
    min_distance_m: float = 10.0
    # radio
    bandwidth_hz: float = 15e3
    noise_psd_dbm_hz: float = -174.0
    noise_figure_db: float = 10.0
    carrier_ghz: float = 2.0
    p_max_dbm: tuple[float, ...] = (33.0,)
    p_avg_dbm: tuple[float, ...] = (30.0,)
    # channel process
    channel_correlation: float = 0.998
    shadowing_enabled: bool = False
    shadowing_sigma_db: float = 4.0
    normalize_gain: bool = True
    # run
    horizon: int = 1000
    csi_delay: int = 4
    seed: int = 1
    algorithms: tuple[str, ...] = ("proposed",)
    out_dir: str = "results"
    channel_trace_in: str = ""
    channel_trace_out: str = ""

    def __post_init__(self):
        self.p_max_dbm = _per_cell(self.p_max_dbm, self.cells)
        self.p_avg_dbm = _per_cell(self.p_avg_dbm, self.cells)
        if isinstance(self.algorithms, str):
            self.algorithms = (self.algorithms,)
        else:
            self.algorithms = tuple(self.algorithms)

    # -- derived quantities ---------------------------------------------

    def p_max_watts(self) -> np.ndarray:
        return np.array([dbm_to_watts(v) for v in self.p_max_dbm])

    def p_avg_watts(self) -> np.ndarray:
        return np.array([dbm_to_watts(v) for v in self.p_avg_dbm])

    def validate(self) -> "ScenarioConfig":
        def check(cond, msg):
            if not cond:
                raise ConfigValidationError(msg)

        for name in ("cells", "antennas_per_cell", "num_sps", "users_per_sp",
                     "horizon", "csi_delay", "seed"):
            check(isinstance(getattr(self, name), int) and not isinstance(getattr(self, name), bool),
                  f"{name} must be an integer")
        check(self.cells >= 1, "cells must be >= 1")
        check(self.cell_radius_m > 0, "cell_radius_m must be positive")
        check(self.antennas_per_cell >= 1, "antennas_per_cell must be >= 1")
        check(self.num_sps >= 1, "num_sps must be >= 1")
        check(self.users_per_sp >= 1, "users_per_sp must be >= 1")
        check(self.users_per_sp <= self.antennas_per_cell,
              "users_per_sp must not exceed antennas_per_cell (zero forcing)")
        check(0 < self.min_distance_m < self.cell_radius_m,
              "min_distance_m must lie in (0, cell_radius_m)")
        check(self.bandwidth_hz > 0, "bandwidth_hz must be positive")
        check(self.carrier_ghz > 0, "carrier_ghz must be positive")
        check(len(self.p_max_dbm) == self.cells, "p_max_dbm needs one value per cell")
        check(len(self.p_avg_dbm) == self.cells, "p_avg_dbm needs one value per cell")
        for avg, mx in zip(self.p_avg_dbm, self.p_max_dbm):
            check(avg <= mx, f"p_avg_dbm {avg} exceeds p_max_dbm {mx}")
        check(0.0 <= self.channel_correlation <= 1.0,
              "channel_correlation must be in [0, 1]")
        check(self.shadowing_sigma_db >= 0, "shadowing_sigma_db must be >= 0")
        check(self.horizon >= 2, "horizon must be >= 2")
        check(1 <= self.csi_delay < self.horizon, "csi_delay must satisfy 1 <= delay < horizon")
        check(self.seed >= 0, "seed must be a nonnegative integer")
        check(len(self.algorithms) > 0, "algorithms must not be empty")
        for name in self.algorithms:
            check(name in ALGORITHM_NAMES + ("all",), f"unknown algorithm {name!r}")
        return self


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


def watts_to_dbm(watts: float) -> float:
    return 10.0 * math.log10(watts * 1000.0)


def _per_cell(value, cells: int) -> tuple[float, ...]:
    if isinstance(value, (int, float)):
        return (float(value),) * cells
    vals = tuple(float(v) for v in value)
    if len(vals) == 1:
        return vals * cells
    return vals


_FIELD_TYPES = {f.name: f.type for f in fields(ScenarioConfig)}


def _parse_scalar(raw: str):
    low = raw.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    return raw


def _parse_value(raw: str):
    raw = raw.strip()
    if "," in raw:
        return tuple(_parse_scalar(part.strip()) for part in raw.split(",") if part.strip())
    return _parse_scalar(raw)


def parse_config_text(text: str) -> ScenarioConfig:
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigParseError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise ConfigValidationError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigParseError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(raw)
    try:
        cfg = ScenarioConfig(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigParseError(f"bad config values: {exc}") from exc
    return cfg.validate()


def load_config(path) -> ScenarioConfig:
    """Parse and validate a config file; an empty file gives all defaults."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigFileError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)


def dumps_config(cfg: ScenarioConfig) -> str:
    """Serialize to the flat key = value format (round-trips through load)."""
    lines = []
    for f in fields(ScenarioConfig):
        val = getattr(cfg, f.name)
        if isinstance(val, tuple):
            rendered = ", ".join(_render_scalar(v) for v in val)
            if not rendered:
                continue
        else:
            rendered = _render_scalar(val)
        lines.append(f"{f.name} = {rendered}")
    return "\n".join(lines) + "\n"


def _render_scalar(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def save_config(cfg: ScenarioConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_config(cfg))


def config_as_dict(cfg: ScenarioConfig) -> dict:
    """JSON-friendly echo of every field."""
    out = {}
    for f in fields(ScenarioConfig):
        val = getattr(cfg, f.name)
        out[f.name] = list(val) if isinstance(val, tuple) else val
    return out
