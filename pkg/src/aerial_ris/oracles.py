"""Independent checks of the optimiser against closed-form and brute-force answers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .channel import aligned_snr_bound, assemble_channels
from .objective import PHASES, DecisionPoint, RisProblem, SmoothingParams, analytic_phase_gradient, fd_gradient
from .objective import block_bounds, smoothed_objective
from .scenario import ScenarioConfig, generate_scenario, seed_streams
from .solver import SolverParams, psca_run

# Phase-only problems are smooth and cheap; a short geometric run suffices.
PHASE_SOLVER = SolverParams(
    max_iters=400,
    schedule="geometric",
    rho=0.99,
    tau=(5.0, 1.0, 1.0),
    tau_scaling="peak",
    rel_tol=1e-10,
    patience=10,
    active_blocks=(PHASES,),
    periodic_blocks=(PHASES,),
)


@dataclass(frozen=True)
class AlignmentCase:
    seed: int
    snr: float
    bound: float

    @property
    def ratio(self) -> float:
        return self.snr / self.bound


@dataclass(frozen=True)
class GridCase:
    seed: int
    optimizer_rate: float
    grid_rate: float
    resolution_deg: float

    @property
    def shortfall(self) -> float:
        """Relative gap to the grid best; negative when the optimiser beats the grid."""
        return 1.0 - self.optimizer_rate / self.grid_rate


def _random_pose(scenario, rng) -> DecisionPoint:
    return DecisionPoint(
        rng.uniform(0.0, 2.0 * math.pi, scenario.n_elements),
        rng.uniform(scenario.position_lower, scenario.position_upper),
        rng.uniform(scenario.orientation_lower, scenario.orientation_upper),
    )


def _optimise_phases(scenario, x0: DecisionPoint, params: SolverParams, sp: SmoothingParams) -> DecisionPoint:
    problem = RisProblem(scenario, sp, scale=1e6, phase_gradient="analytic")
    trace = psca_run(problem.from_point(x0), problem, params)
    return x0.with_block(PHASES, problem.to_point(trace.final).phases)


def _overrides(config: ScenarioConfig | Mapping | None, **extra) -> ScenarioConfig:
    base = config if isinstance(config, ScenarioConfig) else ScenarioConfig.from_mapping(config)
    return base.with_overrides(extra)


def single_user_alignment(
    seeds=range(5),
    config: ScenarioConfig | Mapping | None = None,
    params: SolverParams = PHASE_SOLVER,
    sp: SmoothingParams = SmoothingParams(),
) -> list[AlignmentCase]:
    """Phase-only optimisation for one user against the co-phased SNR bound."""
    cfg = _overrides(config, n_users=1)
    out = []
    for seed in seeds:
        scenario = generate_scenario(seed, cfg)
        _, rng = seed_streams(seed)
        x = _optimise_phases(scenario, _random_pose(scenario, rng), params, sp)
        ch = assemble_channels(scenario, x.position, x.orientation)
        snr = float(ch.snr(x.phases, scenario.radio)[0])
        out.append(AlignmentCase(int(seed), snr, aligned_snr_bound(ch, 0, scenario.radio)))
    return out


def grid_best_rate(ch, radio, resolution_deg: float = 1.0) -> tuple[float, np.ndarray]:
    """Exhaustive search over a two-element phase grid on ``[0, 360)`` degrees."""
    if ch.cascade.shape != (1, 2):
        raise ValueError("grid oracle needs exactly one user and two RIS elements")
    if not 0 < resolution_deg <= 360:
        raise ValueError(f"grid resolution must lie in (0, 360], got {resolution_deg}")
    axis = np.deg2rad(np.arange(0.0, 360.0, resolution_deg))
    t1, t2 = np.meshgrid(axis, axis, indexing="ij")
    c1, c2 = ch.cascade[0]
    amp = c1 * np.exp(1j * t1) + c2 * np.exp(1j * t2)
    rate = radio.bandwidth * np.log2(1.0 + radio.snr_scale * np.abs(amp) ** 2)
    i, j = np.unravel_index(np.argmax(rate), rate.shape)
    return float(rate[i, j]), np.array([axis[i], axis[j]])


def grid_oracle(
    seeds=range(3),
    resolution_deg: float = 1.0,
    config: ScenarioConfig | Mapping | None = None,
    params: SolverParams = PHASE_SOLVER,
    sp: SmoothingParams = SmoothingParams(),
) -> list[GridCase]:
    """Optimiser vs exhaustive grid for one user and a 2x1 RIS."""
    cfg = _overrides(config, n_users=1, ris_h=2, ris_v=1)
    out = []
    for seed in seeds:
        scenario = generate_scenario(seed, cfg)
        _, rng = seed_streams(seed)
        x = _optimise_phases(scenario, _random_pose(scenario, rng), params, sp)
        ch = assemble_channels(scenario, x.position, x.orientation)
        best, _ = grid_best_rate(ch, scenario.radio, resolution_deg)
        out.append(GridCase(int(seed), float(ch.rates(x.phases, scenario.radio)[0]), best, resolution_deg))
    return out


@dataclass(frozen=True)
class GradientCheck:
    index: int
    rel_error: float
    point: DecisionPoint


def gradient_check(
    n_points: int = 20,
    seed: int = 0,
    config: ScenarioConfig | Mapping | None = None,
    sp: SmoothingParams = SmoothingParams(),
) -> list[GradientCheck]:
    """Analytic vs central-difference phase gradient at seeded feasible points.

    The error is ``max|g_analytic - g_fd| / max|g_analytic|``.
    """
    if int(n_points) < 1:
        raise ValueError(f"need at least one point, got {n_points}")
    cfg = _overrides(config)
    scenario = generate_scenario(seed, cfg)
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)).spawn(3)[2])
    bounds = block_bounds(scenario, PHASES)
    out = []
    for n in range(int(n_points)):
        x = _random_pose(scenario, rng)
        ga = analytic_phase_gradient(x, scenario, sp)
        gf = fd_gradient(lambda v: smoothed_objective(v, scenario, sp), x, PHASES, sp, bounds)
        scale = np.max(np.abs(ga))
        err = float(np.max(np.abs(ga - gf)) / scale) if scale > 0 else float(np.max(np.abs(gf)))
        out.append(GradientCheck(n, err, x))
    return out
