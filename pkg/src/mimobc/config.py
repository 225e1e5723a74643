"""Experiment configuration: JSON file plus flag overrides.

Precedence is flags > file > defaults.  Unknown keys are rejected so typos
fail loudly instead of silently running with defaults.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .channel import CorrelationModel, SystemProfile, make_profile
from .errors import ConfigurationError

SCHEMA_VERSION = "1"

_KINDS = ("table1", "rate-loss", "curves", "validate")

_KNOWN_KEYS = {
    "experiment",
    "N",
    "antennas",
    "weights",
    "correlation",
    "ptx_grid_db",
    "ptx_db",
    "trials",
    "seed",
    "out",
    "format",
    "tolerance",
    "max_iterations",
    "extra_profiles",
}

_DEFAULT_TRIALS = {"table1": 0, "rate-loss": 1000, "curves": 200, "validate": 2000}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    base_antennas: int | None = None
    antennas: tuple[int, ...] | None = None
    weights: tuple[float, ...] | None = None
    correlation: object = "identity"
    ptx_grid_db: tuple[float, ...] = field(default_factory=tuple)
    ptx_db: float = 30.0
    trials: int = 0
    seed: int = 1
    out: str | None = None
    format: str = "csv"
    tolerance: float = 1e-8
    max_iterations: int = 500
    extra_profiles: tuple[tuple[tuple[int, ...], int], ...] = ()


def parse_grid(spec) -> tuple[float, ...]:
    """Parse a power grid: 'start:step:stop' in dB, or an explicit list."""
    if isinstance(spec, str):
        parts = spec.split(":")
        if len(parts) != 3:
            raise ConfigurationError(f"grid spec must be start:step:stop, got {spec!r}")
        try:
            start, step, stop = (float(p) for p in parts)
        except ValueError as exc:
            raise ConfigurationError(f"non-numeric grid spec {spec!r}") from exc
        if step <= 0:
            raise ConfigurationError(f"grid step must be positive, got {step}")
        if stop < start:
            raise ConfigurationError(f"grid stop {stop} below start {start}")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return tuple(start + i * step for i in range(count))
    try:
        grid = tuple(float(p) for p in spec)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"grid must be a list of dB values or a string, got {spec!r}") from exc
    if not grid:
        raise ConfigurationError("power grid must not be empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigurationError(f"power grid must be strictly ascending, got {list(grid)}")
    return grid


def _parse_extra_profiles(raw) -> tuple[tuple[tuple[int, ...], int], ...]:
    profiles = []
    for entry in raw:
        if not isinstance(entry, dict) or set(entry) - {"N", "antennas"}:
            raise ConfigurationError(
                f"extra profile entries need exactly 'N' and 'antennas': {entry!r}"
            )
        try:
            profiles.append(
                (tuple(int(r) for r in entry["antennas"]), int(entry["N"]))
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"malformed extra profile {entry!r}") from exc
    return tuple(profiles)


def load_config(kind: str, path: str | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Merge defaults, an optional JSON file, and flag overrides for one run."""
    if kind not in _KINDS:
        raise ConfigurationError(f"unknown experiment kind {kind!r}; expected one of {_KINDS}")
    merged: dict = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as handle:
                data = json.load(handle)
        except OSError as exc:
            raise ConfigurationError(f"cannot read config file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigurationError(f"config file {path} must hold a JSON object")
        unknown = set(data) - _KNOWN_KEYS
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        merged.update(data)
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = value

    declared = merged.pop("experiment", None)
    if declared is not None and declared != kind:
        raise ConfigurationError(
            f"config file declares experiment {declared!r} but the {kind!r} subcommand was invoked"
        )

    try:
        trials = int(merged.pop("trials", _DEFAULT_TRIALS[kind]))
        seed = int(merged.pop("seed", 1))
        ptx_db = float(merged.pop("ptx_db", 30.0))
        tolerance = float(merged.pop("tolerance", 1e-8))
        max_iterations = int(merged.pop("max_iterations", 500))
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"malformed numeric config value: {exc}") from exc
    if trials < 0:
        raise ConfigurationError(f"trials must be nonnegative, got {trials}")
    if seed < 0:
        raise ConfigurationError(f"seed must be nonnegative, got {seed}")
    if tolerance <= 0:
        raise ConfigurationError(f"tolerance must be positive, got {tolerance}")
    if max_iterations < 1:
        raise ConfigurationError(f"max_iterations must be positive, got {max_iterations}")

    fmt = merged.pop("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigurationError(f"format must be 'csv' or 'json', got {fmt!r}")

    base = merged.pop("N", None)
    antennas = merged.pop("antennas", None)
    weights = merged.pop("weights", None)
    try:
        base = None if base is None else int(base)
        antennas = None if antennas is None else tuple(int(r) for r in antennas)
        weights = None if weights is None else tuple(float(w) for w in weights)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"malformed profile fields: {exc}") from exc

    grid_spec = merged.pop("ptx_grid_db", None)
    grid = parse_grid(grid_spec) if grid_spec is not None else parse_grid("-10:5:40")

    correlation = merged.pop("correlation", "identity")
    extra = _parse_extra_profiles(merged.pop("extra_profiles", ()))
    out = merged.pop("out", None)

    if merged:
        raise ConfigurationError(f"unknown config keys: {sorted(merged)}")

    return ExperimentConfig(
        kind=kind,
        base_antennas=base,
        antennas=antennas,
        weights=weights,
        correlation=correlation,
        ptx_grid_db=grid,
        ptx_db=ptx_db,
        trials=trials,
        seed=seed,
        out=out,
        format=fmt,
        tolerance=tolerance,
        max_iterations=max_iterations,
        extra_profiles=extra,
    )


def build_profile(config: ExperimentConfig) -> SystemProfile:
    if config.base_antennas is None or config.antennas is None:
        raise ConfigurationError(
            f"the {config.kind!r} experiment needs 'N' and 'antennas' in the config"
        )
    return make_profile(config.base_antennas, config.antennas, config.weights)


def build_correlation(config: ExperimentConfig, profile: SystemProfile) -> CorrelationModel | None:
    """Instantiate the configured correlation model for a profile.

    Accepts 'identity', {'scalars': [c_1, ..., c_K]}, or
    {'matrices': [...]} with entries either real numbers or [re, im] pairs.
    """
    spec = config.correlation
    if spec == "identity" or spec is None:
        return None
    if isinstance(spec, dict) and set(spec) == {"scalars"}:
        return CorrelationModel.scalar(profile, spec["scalars"])
    if isinstance(spec, dict) and set(spec) == {"matrices"}:
        blocks = []
        for raw in spec["matrices"]:
            matrix = np.array(
                [
                    [
                        complex(entry[0], entry[1])
                        if isinstance(entry, (list, tuple))
                        else complex(entry)
                        for entry in row
                    ]
                    for row in raw
                ]
            )
            blocks.append(matrix)
        return CorrelationModel.from_blocks(blocks)
    raise ConfigurationError(
        "correlation must be 'identity', {'scalars': [...]}, or {'matrices': [...]}, "
        f"got {spec!r}"
    )
