"""Parallel successive convex approximation over box-constrained blocks.

Every iteration linearises the objective around the shared iterate, minimises
one convex surrogate per active block over its box, then moves a fraction
``gamma`` of the way toward the surrogate minimisers.

A problem is any object exposing

* ``lower`` / ``upper``: lists of per-block bound arrays,
* ``objective(blocks) -> float``,
* ``gradient(blocks, i) -> ndarray`` for block ``i`` (1-based),
* optionally ``metrics(blocks) -> dict`` recorded in the trace.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

SCHEDULES = ("harmonic", "constant", "geometric")
SURROGATES = ("proximal", "linear")
TAU_SCALINGS = ("fixed", "objective", "peak")


class InfeasiblePointError(ValueError):
    pass


@dataclass(frozen=True)
class SolverParams:
    max_iters: int = 500
    schedule: str = "harmonic"
    gamma0: float = 1.0
    rho: float = 0.99
    surrogate: str = "proximal"
    tau: tuple[float, ...] = (1.0, 1.0, 1.0)
    tau_scaling: str = "fixed"
    rel_tol: float = 1e-6
    patience: int = 10
    active_blocks: tuple[int, ...] = (1, 2, 3)
    # Blocks whose box is one period of a circular variable (proximal mode only).
    periodic_blocks: tuple[int, ...] = ()

    def __post_init__(self):
        if int(self.max_iters) < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"schedule must be one of {SCHEDULES}, got {self.schedule!r}")
        if self.surrogate not in SURROGATES:
            raise ValueError(f"surrogate must be one of {SURROGATES}, got {self.surrogate!r}")
        if self.tau_scaling not in TAU_SCALINGS:
            raise ValueError(f"tau_scaling must be one of {TAU_SCALINGS}, got {self.tau_scaling!r}")
        if not 0 < self.gamma0 <= 1:
            raise ValueError(f"gamma0 must lie in (0, 1], got {self.gamma0}")
        if not 0 < self.rho <= 1:
            raise ValueError(f"rho must lie in (0, 1], got {self.rho}")
        if any(t <= 0 for t in self.tau):
            raise ValueError(f"tau must be positive, got {self.tau}")
        if int(self.patience) < 1:
            raise ValueError("patience must be >= 1")
        object.__setattr__(self, "tau", tuple(float(t) for t in self.tau))
        object.__setattr__(self, "active_blocks", tuple(sorted(set(int(b) for b in self.active_blocks))))
        object.__setattr__(self, "periodic_blocks", tuple(sorted(set(int(b) for b in self.periodic_blocks))))

    def tau_for(self, i: int) -> float:
        return self.tau[min(i, len(self.tau)) - 1]


def step_size(l: int, params: SolverParams) -> float:
    if params.schedule == "harmonic":
        gamma = 2.0 / (l + 2.0)
    elif params.schedule == "constant":
        gamma = params.gamma0
    else:
        gamma = params.gamma0 * params.rho**l
    # Geometric decay can underflow to 0 for huge l; keep it strictly positive.
    return float(min(1.0, max(gamma, np.finfo(float).tiny)))


def _check_block(x, lower, upper) -> None:
    if np.any(np.asarray(x) < lower) or np.any(np.asarray(x) > upper):
        raise InfeasiblePointError("block value lies outside its box")


def solve_block_surrogate(grad, x, lower, upper, mode: str = "proximal", tau: float = 1.0) -> np.ndarray:
    """Minimiser over the box of ``<grad, y - x>`` (+ ``tau/2 |y - x|^2`` in proximal mode)."""
    grad = np.asarray(grad, dtype=float)
    x = np.asarray(x, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    _check_block(x, lower, upper)
    if mode == "proximal":
        return np.clip(x - grad / tau, lower, upper)
    if mode == "linear":
        return np.where(grad > 0, lower, np.where(grad < 0, upper, x))
    raise ValueError(f"unknown surrogate mode {mode!r}")


@dataclass
class SolverTrace:
    """Per-iteration record. Entry 0 is the starting point."""

    objective: list[float] = field(default_factory=list)
    gamma: list[float] = field(default_factory=list)
    update_norms: list[tuple[float, ...]] = field(default_factory=list)
    metrics: list[dict[str, float]] = field(default_factory=list)
    iterates: list[tuple[np.ndarray, ...]] = field(default_factory=list)
    converged: bool = False

    def __len__(self) -> int:
        return len(self.objective)

    @property
    def final(self) -> tuple[np.ndarray, ...]:
        return self.iterates[-1]

    def metric(self, name: str) -> np.ndarray:
        return np.array([m[name] for m in self.metrics])


def _check_feasible(blocks, problem) -> None:
    for i, (v, lo, hi) in enumerate(zip(blocks, problem.lower, problem.upper), start=1):
        v = np.asarray(v)
        if v.shape != np.shape(lo) or np.any(v < lo) or np.any(v > hi) or not np.all(np.isfinite(v)):
            raise InfeasiblePointError(f"block {i} is infeasible")


def psca_step(
    blocks: Sequence[np.ndarray],
    problem,
    params: SolverParams,
    l: int = 0,
    f_scale: float | None = None,
) -> tuple[list[np.ndarray], dict[str, Any]]:
    """One PSCA iteration from ``blocks``; inactive blocks are passed through untouched.

    Unless ``tau_scaling`` is ``"fixed"``, the proximal weights are multiplied
    by ``f_scale`` (by default ``|F(x^l)|``), so steps respond to relative
    rather than absolute objective changes.
    """
    gamma = step_size(l, params)
    tau_mult = 1.0
    if params.tau_scaling != "fixed":
        if f_scale is None:
            f_scale = abs(float(problem.objective(blocks)))
        tau_mult = max(f_scale, np.finfo(float).tiny)
    # All surrogates see the same iterate, so the order of these solves is immaterial.
    targets = {}
    wrapped = set()
    for i in params.active_blocks:
        if i > len(blocks):
            continue
        x_i = blocks[i - 1]
        lo, hi = problem.lower[i - 1], problem.upper[i - 1]
        g = problem.gradient(blocks, i)
        tau = params.tau_for(i) * tau_mult
        if i in params.periodic_blocks and params.surrogate == "proximal":
            # On a circle the proximal minimiser is the plain gradient step, wrapped later.
            _check_block(x_i, lo, hi)
            targets[i] = np.asarray(x_i, dtype=float) - np.asarray(g, dtype=float) / tau
            wrapped.add(i)
        else:
            targets[i] = solve_block_surrogate(g, x_i, lo, hi, params.surrogate, tau)
    new_blocks = []
    norms = []
    for i, x_i in enumerate(blocks, start=1):
        if i in targets:
            lo, hi = problem.lower[i - 1], problem.upper[i - 1]
            moved = x_i + gamma * (targets[i] - x_i)
            if i in wrapped:
                period = hi - lo
                moved = np.where(period > 0, lo + np.mod(moved - lo, np.where(period > 0, period, 1.0)), lo)
            # Guards against round-off past the bounds; a no-op in exact arithmetic.
            moved = np.clip(moved, lo, hi)
            norms.append(float(np.linalg.norm(moved - x_i)))
            new_blocks.append(moved)
        else:
            norms.append(0.0)
            new_blocks.append(x_i)
    return new_blocks, {"gamma": gamma, "update_norms": tuple(norms)}


def psca_run(x0: Sequence[np.ndarray], problem, params: SolverParams = SolverParams()) -> SolverTrace:
    """Iterate ``psca_step`` until the relative objective change stays below
    ``rel_tol`` for ``patience`` consecutive iterations, or ``max_iters``."""
    blocks = [np.array(b, dtype=float) for b in x0]
    _check_feasible(blocks, problem)
    has_metrics = hasattr(problem, "metrics")

    trace = SolverTrace()
    f = float(problem.objective(blocks))
    trace.objective.append(f)
    trace.gamma.append(float("nan"))
    trace.update_norms.append(tuple(0.0 for _ in blocks))
    trace.metrics.append(problem.metrics(blocks) if has_metrics else {})
    trace.iterates.append(tuple(b.copy() for b in blocks))

    quiet = 0
    peak = abs(f)
    for l in range(params.max_iters):
        # "peak" keeps the largest |F| seen so far, so a collapse of the
        # objective cannot inflate the next step.
        peak = max(peak, abs(f))
        scale = peak if params.tau_scaling == "peak" else abs(f)
        blocks, diag = psca_step(blocks, problem, params, l, scale)
        f_new = float(problem.objective(blocks))
        trace.objective.append(f_new)
        trace.gamma.append(diag["gamma"])
        trace.update_norms.append(diag["update_norms"])
        trace.metrics.append(problem.metrics(blocks) if has_metrics else {})
        trace.iterates.append(tuple(b.copy() for b in blocks))
        quiet = quiet + 1 if abs(f_new - f) <= params.rel_tol * abs(f) else 0
        f = f_new
        if quiet >= params.patience:
            trace.converged = True
            break
    return trace
