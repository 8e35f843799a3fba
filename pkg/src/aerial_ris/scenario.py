"""Scenario description and seeded generation."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Mapping

import numpy as np

from .channel import RadioParams, db_to_linear, dbm_to_watts
from .geometry import (
    ORIENTATION_LOWER,
    ORIENTATION_UPPER,
    BsArrayGeometry,
    RisArrayGeometry,
)


@dataclass(frozen=True)
class ScenarioConfig:
    """Scalar knobs of a scenario. Defaults give the reference 10-user setup.

    ``element_spacing`` of ``None`` means half a wavelength for both arrays.
    """

    n_users: int = 10
    area_x: float = 1000.0
    area_y: float = 1000.0
    bs_height: float = 68.0
    n_bs: int = 10
    wavelength: float = 0.15
    tx_power_w: float = 1.0
    antenna_gain_db: float = 8.0
    ref_gain_db: float = -30.0
    noise_dbm: float = -100.0
    bandwidth_hz: float = 10e6
    ris_h: int = 5
    ris_v: int = 4
    element_spacing: float | None = None
    x_bounds: tuple[float, float] = (0.0, 1000.0)
    y_bounds: tuple[float, float] = (0.0, 1000.0)
    z_bounds: tuple[float, float] = (150.0, 300.0)

    def __post_init__(self):
        if int(self.n_users) < 1:
            raise ValueError(f"n_users must be >= 1, got {self.n_users}")
        for name in ("x_bounds", "y_bounds", "z_bounds"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ValueError(f"{name}: lower bound {lo} exceeds upper bound {hi}")
            object.__setattr__(self, name, (float(lo), float(hi)))
        if not (self.area_x > 0 and self.area_y > 0):
            raise ValueError("area side lengths must be positive")

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any] | None) -> "ScenarioConfig":
        values = dict(values or {})
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
        for key in ("x_bounds", "y_bounds", "z_bounds"):
            if key in values:
                values[key] = tuple(values[key])
        return cls(**values)

    def with_overrides(self, overrides: Mapping[str, Any] | None) -> "ScenarioConfig":
        merged = {**asdict(self), **dict(overrides or {})}
        return ScenarioConfig.from_mapping(merged)

    @property
    def spacing(self) -> float:
        return self.wavelength / 2 if self.element_spacing is None else float(self.element_spacing)


@dataclass(frozen=True)
class Scenario:
    """Immutable world: arrays, radio constants, users and the feasible boxes."""

    bs: BsArrayGeometry
    ris: RisArrayGeometry
    radio: RadioParams
    users: np.ndarray
    position_lower: np.ndarray
    position_upper: np.ndarray
    orientation_lower: np.ndarray = field(default_factory=lambda: ORIENTATION_LOWER.copy())
    orientation_upper: np.ndarray = field(default_factory=lambda: ORIENTATION_UPPER.copy())
    area: tuple[float, float] = (1000.0, 1000.0)

    def __post_init__(self):
        users = np.asarray(self.users, dtype=float).reshape(-1, 3)
        if users.shape[0] == 0:
            raise ValueError("scenario needs at least one user")
        if not np.all(np.isfinite(users)):
            raise ValueError("user positions must be finite")
        object.__setattr__(self, "users", users)
        for name in ("position_lower", "position_upper", "orientation_lower", "orientation_upper"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(3))

    @property
    def n_users(self) -> int:
        return self.users.shape[0]

    @property
    def n_elements(self) -> int:
        return self.ris.n_elements

    def with_users(self, users) -> "Scenario":
        return replace(self, users=np.asarray(users, dtype=float))

    @classmethod
    def from_config(cls, config: ScenarioConfig, users) -> "Scenario":
        d = config.spacing
        bs = BsArrayGeometry(
            n_elements=config.n_bs,
            width=d,
            spacing=d,
            position=np.array([0.0, 0.0, config.bs_height]),
        )
        ris = RisArrayGeometry(config.ris_h, config.ris_v, d, d)
        radio = RadioParams(
            wavelength=config.wavelength,
            ref_gain=db_to_linear(config.ref_gain_db),
            tx_power=config.tx_power_w,
            antenna_gain=db_to_linear(config.antenna_gain_db),
            noise_power=dbm_to_watts(config.noise_dbm),
            bandwidth=config.bandwidth_hz,
        )
        (x0, x1), (y0, y1), (z0, z1) = config.x_bounds, config.y_bounds, config.z_bounds
        return cls(
            bs=bs,
            ris=ris,
            radio=radio,
            users=users,
            position_lower=np.array([x0, y0, z0]),
            position_upper=np.array([x1, y1, z1]),
            area=(config.area_x, config.area_y),
        )


def seed_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent generators for (user placement, solver initialisation)."""
    users_ss, init_ss = np.random.SeedSequence(int(seed)).spawn(2)
    return np.random.Generator(np.random.PCG64(users_ss)), np.random.Generator(np.random.PCG64(init_ss))


def generate_scenario(seed: int, overrides: Mapping[str, Any] | ScenarioConfig | None = None) -> Scenario:
    """Scenario with users dropped uniformly on the ground, driven by ``seed``."""
    if isinstance(overrides, ScenarioConfig):
        config = overrides
    else:
        config = ScenarioConfig().with_overrides(overrides)
    rng, _ = seed_streams(seed)
    k = int(config.n_users)
    users = np.zeros((k, 3))
    users[:, 0] = rng.uniform(0.0, config.area_x, size=k)
    users[:, 1] = rng.uniform(0.0, config.area_y, size=k)
    return Scenario.from_config(config, users)
