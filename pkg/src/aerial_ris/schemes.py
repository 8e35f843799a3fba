"""The three comparison schemes and multi-seed aggregation.

* ``PLO``: phases, location and orientation are all optimised.
* ``PL``: phases and location; orientation pinned (level RIS by default).
* ``PO``: phases and orientation; the UAV hovers over the user barycenter.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .geometry import barycenter
from .objective import ORIENTATION, POSITION, DecisionPoint, RisProblem, SmoothingParams, compute_rates
from .scenario import Scenario, ScenarioConfig, generate_scenario, seed_streams
from .solver import SolverParams, SolverTrace, psca_run

__all__ = [
    "DEFAULT_SOLVER",
    "DEFAULT_STARTS",
    "KINDS",
    "RunResult",
    "Scenario",
    "SchemeSpec",
    "compare_schemes",
    "generate_scenario",
    "initial_point",
    "initial_points",
    "po_position",
    "run_scheme",
    "run_seed",
]

KINDS = ("PLO", "PL", "PO")
MASKS = {"PLO": (1, 2, 3), "PL": (1, 2), "PO": (1, 3)}
FROM_PLO = "from-plo"

# Objective values are handed to the solver in Mbit/s.
RATE_UNIT = 1e6

# Tuned for the default scenario. Position steps are damped hardest because
# the beam pattern varies on a scale of tens of meters inside a 1 km box.
DEFAULT_SOLVER = SolverParams(
    max_iters=1500,
    schedule="geometric",
    gamma0=1.0,
    rho=0.998,
    tau=(5.0, 300.0, 60.0),
    tau_scaling="peak",
    periodic_blocks=(1,),
)
# Best of this many seeded starts per scheme and seed.
DEFAULT_STARTS = 3


@dataclass(frozen=True)
class SchemeSpec:
    kind: str = "PLO"
    fixed_orientation: tuple[float, float, float] = (0.0, 0.0, 0.0)
    # "from-plo" or an altitude in meters
    po_altitude: float | str = FROM_PLO
    po_fallback_altitude: float = 150.0

    def __post_init__(self):
        kind = str(self.kind).upper()
        if kind not in KINDS:
            raise ValueError(f"scheme kind must be one of {KINDS}, got {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "fixed_orientation", tuple(float(v) for v in self.fixed_orientation))
        if len(self.fixed_orientation) != 3:
            raise ValueError("fixed_orientation needs three angles")
        if isinstance(self.po_altitude, str):
            if self.po_altitude != FROM_PLO:
                raise ValueError(f"po_altitude must be {FROM_PLO!r} or a number, got {self.po_altitude!r}")
        else:
            object.__setattr__(self, "po_altitude", float(self.po_altitude))

    @property
    def mask(self) -> tuple[int, ...]:
        return MASKS[self.kind]


@dataclass
class RunResult:
    scheme: str
    seed: int
    trace: SolverTrace
    points: list[DecisionPoint]
    min_rate: float
    avg_rate: float
    wall_time: float
    objective_unit: float = RATE_UNIT

    @property
    def final(self) -> DecisionPoint:
        return self.points[-1]

    def min_rate_curve(self) -> np.ndarray:
        return self.trace.metric("min_rate")

    def avg_rate_curve(self) -> np.ndarray:
        return self.trace.metric("avg_rate")


def initial_points(scenario: Scenario, seed: int, starts: int = 1) -> list[DecisionPoint]:
    """Uniform draws over the feasible box from the seed's initialisation stream.

    Draw ``s`` does not depend on ``starts``, so adding starts keeps the earlier ones.
    """
    _, rng = seed_streams(seed)
    out = []
    for _ in range(int(starts)):
        phases = rng.uniform(0.0, 2.0 * math.pi, scenario.n_elements)
        position = rng.uniform(scenario.position_lower, scenario.position_upper)
        orientation = rng.uniform(scenario.orientation_lower, scenario.orientation_upper)
        out.append(DecisionPoint(phases, position, orientation))
    return out


def initial_point(scenario: Scenario, seed: int) -> DecisionPoint:
    return initial_points(scenario, seed, 1)[0]


def po_position(users, altitude: float, z_bounds: tuple[float, float] = (150.0, 300.0)) -> np.ndarray:
    """Hover point above the user barycenter."""
    lo, hi = z_bounds
    if not lo <= altitude <= hi:
        raise ValueError(f"altitude {altitude} outside [{lo}, {hi}]")
    c = barycenter(users)
    return np.array([c[0], c[1], float(altitude)])


def _po_altitude(spec: SchemeSpec, plo_altitude: float | None) -> float:
    if isinstance(spec.po_altitude, float):
        return spec.po_altitude
    return spec.po_fallback_altitude if plo_altitude is None else float(plo_altitude)


def run_scheme(
    spec: SchemeSpec,
    scenario: Scenario,
    seed: int,
    params: SolverParams = DEFAULT_SOLVER,
    sp: SmoothingParams = SmoothingParams(),
    plo_altitude: float | None = None,
    starts: int = DEFAULT_STARTS,
) -> RunResult:
    """Optimise one scheme from the seed's shared starting points.

    With ``starts > 1`` the run with the lowest final objective is kept.
    ``plo_altitude`` feeds a PO spec whose altitude source is the PLO run.
    """
    if int(starts) < 1:
        raise ValueError(f"starts must be >= 1, got {starts}")
    start = time.perf_counter()
    problem = RisProblem(scenario, sp, scale=RATE_UNIT, phase_gradient="analytic")
    run_params = replace(params, active_blocks=spec.mask)
    best = None
    for x0 in initial_points(scenario, seed, starts):
        if spec.kind == "PL":
            x0 = x0.with_block(ORIENTATION, np.array(spec.fixed_orientation))
        elif spec.kind == "PO":
            z_bounds = (scenario.position_lower[2], scenario.position_upper[2])
            x0 = x0.with_block(POSITION, po_position(scenario.users, _po_altitude(spec, plo_altitude), z_bounds))
        trace = psca_run(problem.from_point(x0), problem, run_params)
        if best is None or trace.objective[-1] < best[1].objective[-1]:
            best = (x0, trace)
    x0, trace = best
    # Pinned blocks keep their native values exactly rather than round-tripping
    # through the unit cube.
    points = []
    for blocks in trace.iterates:
        x = problem.to_point(blocks)
        for i in (POSITION, ORIENTATION):
            if i not in spec.mask:
                x = x.with_block(i, x0.block(i))
        points.append(x)
    rates = compute_rates(points[-1], scenario)
    return RunResult(
        scheme=spec.kind,
        seed=int(seed),
        trace=trace,
        points=points,
        min_rate=float(rates.min()),
        avg_rate=float(rates.mean()),
        wall_time=time.perf_counter() - start,
    )


def _ordered(specs: Sequence[SchemeSpec]) -> list[SchemeSpec]:
    # PLO first, so a PO run can take its altitude.
    return sorted(specs, key=lambda s: KINDS.index(s.kind))


def run_seed(
    seed: int,
    specs: Sequence[SchemeSpec],
    scenario_fn: Callable[[int], Scenario],
    params: SolverParams = DEFAULT_SOLVER,
    sp: SmoothingParams = SmoothingParams(),
    starts: int = DEFAULT_STARTS,
) -> list[RunResult]:
    """All requested schemes for one seed on a shared scenario."""
    scenario = scenario_fn(seed)
    out = []
    plo_z = None
    for spec in _ordered(specs):
        res = run_scheme(spec, scenario, seed, params, sp, plo_altitude=plo_z, starts=starts)
        if spec.kind == "PLO":
            plo_z = float(res.final.position[2])
        out.append(res)
    return out


class _ConfigScenario:
    """Picklable ``seed -> Scenario`` factory."""

    def __init__(self, config: ScenarioConfig | None = None):
        self.config = config or ScenarioConfig()

    def __call__(self, seed: int) -> Scenario:
        return generate_scenario(seed, self.config)


def _padded_mean(curves: list[np.ndarray]) -> np.ndarray:
    # Shorter traces hold their final value out to the longest one.
    n = max(len(c) for c in curves)
    padded = [np.concatenate([c, np.full(n - len(c), c[-1])]) for c in curves]
    return np.mean(padded, axis=0)


def _gain(a: float, b: float) -> float:
    return a / b - 1.0 if b > 0 else float("nan")


@dataclass
class Summary:
    seeds: list[int]
    results: list[RunResult]
    curves: dict[str, dict[str, np.ndarray]] = field(default_factory=dict)
    finals: dict[str, dict[str, float]] = field(default_factory=dict)
    gains: dict[str, dict[str, float]] = field(default_factory=dict)
    per_seed: list[dict] = field(default_factory=list)

    def to_dict(self, curves: bool = True) -> dict:
        out = {
            "seeds": list(self.seeds),
            "finals_mbps": {
                k: {m: v / RATE_UNIT for m, v in d.items()} for k, d in self.finals.items()
            },
            "gains": self.gains,
            "per_seed": self.per_seed,
        }
        if curves:
            out["mean_curves_mbps"] = {
                k: {m: (v / RATE_UNIT).tolist() for m, v in d.items()} for k, d in self.curves.items()
            }
        return out


def summarize(results: Sequence[RunResult], seeds: Sequence[int]) -> Summary:
    """Mean curves, mean finals, PLO gains and the per-seed table."""
    summary = Summary(seeds=list(seeds), results=list(results))
    by_kind: dict[str, list[RunResult]] = {}
    for r in results:
        by_kind.setdefault(r.scheme, []).append(r)
    for kind in KINDS:
        runs = by_kind.get(kind)
        if not runs:
            continue
        summary.curves[kind] = {
            "min_rate": _padded_mean([r.min_rate_curve() for r in runs]),
            "avg_rate": _padded_mean([r.avg_rate_curve() for r in runs]),
        }
        summary.finals[kind] = {
            "min_rate": float(np.mean([r.min_rate for r in runs])),
            "avg_rate": float(np.mean([r.avg_rate for r in runs])),
        }
    if "PLO" in summary.finals:
        for other in ("PL", "PO"):
            if other in summary.finals:
                summary.gains[f"PLO_vs_{other}"] = {
                    m: _gain(summary.finals["PLO"][m], summary.finals[other][m]) for m in ("min_rate", "avg_rate")
                }
    lookup = {(r.scheme, r.seed): r for r in results}
    for s in dict.fromkeys(seeds):
        row: dict = {"seed": int(s)}
        for kind in KINDS:
            if (kind, s) in lookup:
                row[f"{kind}_min_mbps"] = lookup[kind, s].min_rate / RATE_UNIT
        for other in ("PL", "PO"):
            if ("PLO", s) in lookup and (other, s) in lookup:
                row[f"PLO_beats_{other}"] = lookup["PLO", s].min_rate >= lookup[other, s].min_rate
        summary.per_seed.append(row)
    return summary


def compare_schemes(
    scenario_fn: Callable[[int], Scenario] | ScenarioConfig | None,
    seeds: Sequence[int],
    specs: Sequence[SchemeSpec],
    params: SolverParams = DEFAULT_SOLVER,
    sp: SmoothingParams = SmoothingParams(),
    workers: int = 1,
    starts: int = DEFAULT_STARTS,
) -> Summary:
    """Run every spec on every seed and aggregate.

    Seeds are independent and may run in ``workers`` processes; results are
    reduced in seed order either way, so the output does not depend on it.
    """
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise ValueError("need at least one seed")
    if not specs:
        raise ValueError("need at least one scheme")
    if scenario_fn is None or isinstance(scenario_fn, ScenarioConfig):
        scenario_fn = _ConfigScenario(scenario_fn)
    unique = list(dict.fromkeys(seeds))
    if workers > 1 and len(unique) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_seed, s, specs, scenario_fn, params, sp, starts) for s in unique]
            per_seed = [f.result() for f in futures]
    else:
        per_seed = [run_seed(s, specs, scenario_fn, params, sp, starts) for s in unique]
    done = dict(zip(unique, per_seed))
    results = [r for s in seeds for r in done[s]]
    return summarize(results, seeds)
