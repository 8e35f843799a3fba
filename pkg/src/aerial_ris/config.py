"""Experiment configuration files (YAML).

An empty file reproduces the default experiment. Top-level keys::

    scenario:   ScenarioConfig fields
    solver:     SolverParams fields (active_blocks is set per scheme)
    smoothing:  {p, fd_steps}
    schemes:    list of {kind, fixed_orientation, po_altitude, po_fallback_altitude}
    seeds:      list of integers, or an integer count
    starts:     seeded starting points per scheme and seed (best kept)
    workers:    processes for the seed fan-out
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping

import yaml

from .objective import SmoothingParams
from .scenario import ScenarioConfig
from .schemes import DEFAULT_SOLVER, DEFAULT_STARTS, KINDS, SchemeSpec
from .solver import SolverParams

TOP_LEVEL = ("scenario", "solver", "smoothing", "schemes", "seeds", "starts", "workers")


class ConfigError(ValueError):
    pass


def _build(cls, base, values: Mapping[str, Any] | None, section: str):
    values = dict(values or {})
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown {section} keys: {', '.join(unknown)}")
    for k, v in values.items():
        if isinstance(v, list):
            values[k] = tuple(v)
    try:
        return replace(base, **values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{section}: {exc}") from exc


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    solver: SolverParams = DEFAULT_SOLVER
    smoothing: SmoothingParams = field(default_factory=SmoothingParams)
    schemes: tuple[SchemeSpec, ...] = tuple(SchemeSpec(k) for k in KINDS)
    seeds: tuple[int, ...] = tuple(range(10))
    starts: int = DEFAULT_STARTS
    workers: int = 1

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any] | None) -> "ExperimentConfig":
        data = dict(data or {})
        unknown = sorted(set(data) - set(TOP_LEVEL))
        if unknown:
            raise ConfigError(f"unknown top-level keys: {', '.join(unknown)}")
        base = cls()
        scenario = _build(ScenarioConfig, base.scenario, data.get("scenario"), "scenario")
        solver = _build(SolverParams, base.solver, data.get("solver"), "solver")
        smoothing = _build(SmoothingParams, base.smoothing, data.get("smoothing"), "smoothing")
        schemes = base.schemes
        if "schemes" in data:
            raw = data["schemes"]
            if not isinstance(raw, list) or not raw:
                raise ConfigError("schemes must be a non-empty list")
            schemes = tuple(
                _build(SchemeSpec, SchemeSpec(), {"kind": s} if isinstance(s, str) else s, "schemes") for s in raw
            )
        seeds = base.seeds
        if "seeds" in data:
            seeds = parse_seeds(data["seeds"])
        starts = _positive_int(data.get("starts", base.starts), "starts")
        workers = _positive_int(data.get("workers", base.workers), "workers")
        return cls(scenario, solver, smoothing, schemes, seeds, starts, workers)

    @classmethod
    def load(cls, path: str | Path | None) -> "ExperimentConfig":
        if path is None:
            return cls()
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"malformed YAML in {path}: {exc}") from exc
        if data is not None and not isinstance(data, dict):
            raise ConfigError("config file must hold a mapping")
        return cls.from_mapping(data)

    def snapshot(self) -> dict:
        """Plain-data view of every resolved setting."""

        def plain(v):
            if isinstance(v, tuple):
                return [plain(x) for x in v]
            if isinstance(v, dict):
                return {k: plain(x) for k, x in v.items()}
            return v

        return {
            "scenario": plain(asdict(self.scenario)),
            "solver": plain(asdict(self.solver)),
            "smoothing": plain(asdict(self.smoothing)),
            "schemes": [plain(asdict(s)) for s in self.schemes],
            "seeds": list(self.seeds),
            "starts": self.starts,
            "workers": self.workers,
        }


def _positive_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ConfigError(f"{name} must be a positive integer, got {value!r}")
    return value


def parse_seeds(value) -> tuple[int, ...]:
    """An integer ``n`` means seeds ``0..n-1``; a list is taken as is."""
    if isinstance(value, bool):
        raise ConfigError("seeds must be an integer count or a list of integers")
    if isinstance(value, int):
        if value < 1:
            raise ConfigError(f"seed count must be >= 1, got {value}")
        return tuple(range(value))
    if isinstance(value, str):
        value = [v for v in value.replace(",", " ").split() if v]
    try:
        seeds = tuple(int(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad seed list {value!r}") from exc
    if not seeds:
        raise ConfigError("seed list is empty")
    if any(s < 0 for s in seeds):
        raise ConfigError("seeds must be non-negative")
    return seeds
