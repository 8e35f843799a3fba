"""Smoothed max-min rate objective and its gradients.

The decision variable has three blocks, numbered as in the problem statement:

1. RIS phase shifts, ``[0, 2pi]^M``
2. UAV position, an axis-aligned box in meters
3. UAV orientation (roll, pitch, yaw), ``[0, pi/2]^2 x [0, 2pi]``
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .channel import ChannelRealization, assemble_channels, cascade_many
from .scenario import Scenario

PHASES, POSITION, ORIENTATION = 1, 2, 3
BLOCKS = (PHASES, POSITION, ORIENTATION)
BLOCK_NAMES = {PHASES: "phases", POSITION: "position", ORIENTATION: "orientation"}


class ObjectiveDomainError(ValueError):
    """Raised when the p-norm is asked for non-positive rates."""


@dataclass(frozen=True)
class DecisionPoint:
    phases: np.ndarray
    position: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "phases", np.asarray(self.phases, dtype=float).reshape(-1))
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(3))
        object.__setattr__(self, "orientation", np.asarray(self.orientation, dtype=float).reshape(3))

    def block(self, i: int) -> np.ndarray:
        return (self.phases, self.position, self.orientation)[i - 1]

    def blocks(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.phases, self.position, self.orientation

    def with_block(self, i: int, value) -> "DecisionPoint":
        parts = list(self.blocks())
        parts[i - 1] = value
        return DecisionPoint(*parts)


@dataclass(frozen=True)
class SmoothingParams:
    """p-norm exponent and finite-difference steps (rad, m, rad) per block."""

    p: float = -8.0
    fd_steps: tuple[float, float, float] = (1e-4, 1e-2, 1e-4)

    def __post_init__(self):
        if not self.p < 0:
            raise ValueError(f"p must be negative, got {self.p}")
        if len(self.fd_steps) != 3 or not all(h > 0 for h in self.fd_steps):
            raise ValueError(f"fd_steps must be three positive values, got {self.fd_steps}")


def block_bounds(scenario: Scenario, i: int) -> tuple[np.ndarray, np.ndarray]:
    if i == PHASES:
        m = scenario.n_elements
        return np.zeros(m), np.full(m, 2.0 * math.pi)
    if i == POSITION:
        return scenario.position_lower, scenario.position_upper
    if i == ORIENTATION:
        return scenario.orientation_lower, scenario.orientation_upper
    raise ValueError(f"unknown block {i}")


def is_feasible(x: DecisionPoint, scenario: Scenario) -> bool:
    if x.phases.shape != (scenario.n_elements,):
        return False
    for i in BLOCKS:
        lo, hi = block_bounds(scenario, i)
        v = x.block(i)
        if not (np.all(np.isfinite(v)) and np.all(v >= lo) and np.all(v <= hi)):
            return False
    return True


def compute_rates(x: DecisionPoint, scenario: Scenario) -> np.ndarray:
    """Per-user rate in bit/s at decision point ``x``."""
    ch = assemble_channels(scenario, x.position, x.orientation)
    return ch.rates(x.phases, scenario.radio)


def pnorm(rates, p: float) -> float:
    """``(sum r**p)**(1/p)`` for ``p < 0``, factored around the smallest rate."""
    r = np.asarray(rates, dtype=float)
    if r.size == 0 or not np.all(r > 0):
        raise ObjectiveDomainError(f"p-norm with p<0 needs strictly positive rates, got {r}")
    r_min = r.min()
    return float(r_min * np.sum((r / r_min) ** p) ** (1.0 / p))


def smoothed_from_rates(rates, p: float) -> float:
    return -pnorm(rates, p)


def smoothed_objective(x: DecisionPoint, scenario: Scenario, sp: SmoothingParams = SmoothingParams()) -> float:
    """Value to minimise: minus the p-norm of the user rates."""
    return smoothed_from_rates(compute_rates(x, scenario), sp.p)


def central_difference(
    func: Callable[[np.ndarray], float],
    x,
    steps,
    lower=None,
    upper=None,
) -> np.ndarray:
    """Coordinate-wise central differences.

    Probe points are clamped into ``[lower, upper]``; at a bound this turns the
    stencil into a one-sided difference over the shortened interval.
    """
    x = np.asarray(x, dtype=float)
    h = np.broadcast_to(np.asarray(steps, dtype=float), x.shape)
    lo = np.full(x.shape, -np.inf) if lower is None else np.asarray(lower, dtype=float)
    hi = np.full(x.shape, np.inf) if upper is None else np.asarray(upper, dtype=float)
    grad = np.zeros_like(x)
    for j in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[j] = min(x[j] + h[j], hi[j])
        xm[j] = max(x[j] - h[j], lo[j])
        span = xp[j] - xm[j]
        if span <= 0:
            continue
        grad[j] = (func(xp) - func(xm)) / span
    return grad


def fd_gradient(
    F: Callable[[DecisionPoint], float],
    x: DecisionPoint,
    block: int,
    sp: SmoothingParams = SmoothingParams(),
    bounds: tuple[np.ndarray, np.ndarray] | None = None,
) -> np.ndarray:
    """Finite-difference gradient of ``F`` with respect to one block of ``x``."""
    lo, hi = bounds if bounds is not None else (None, None)
    return central_difference(
        lambda v: F(x.with_block(block, v)),
        x.block(block),
        sp.fd_steps[block - 1],
        lo,
        hi,
    )


def _probes(x, h, lo, hi):
    """Clamped central-difference stencil: (plus, minus) points and their spans."""
    n = x.size
    plus = np.tile(x, (n, 1))
    minus = plus.copy()
    idx = np.arange(n)
    plus[idx, idx] = np.minimum(x + h, hi)
    minus[idx, idx] = np.maximum(x - h, lo)
    return plus, minus, plus[idx, idx] - minus[idx, idx]


def pose_fd_gradient(
    x: DecisionPoint,
    scenario: Scenario,
    block: int,
    sp: SmoothingParams = SmoothingParams(),
) -> np.ndarray:
    """Same stencil as :func:`fd_gradient` for the position or orientation block,
    with every probe channel built in one batch."""
    if block not in (POSITION, ORIENTATION):
        raise ValueError("pose_fd_gradient handles the position and orientation blocks only")
    lo, hi = block_bounds(scenario, block)
    v = x.block(block)
    plus, minus, span = _probes(v, np.broadcast_to(sp.fd_steps[block - 1], v.shape), lo, hi)
    stacked = np.vstack([plus, minus])
    other = np.broadcast_to(x.block(ORIENTATION if block == POSITION else POSITION), stacked.shape)
    pos, ori = (stacked, other) if block == POSITION else (other, stacked)
    amp = cascade_many(scenario, pos, ori) @ np.exp(1j * x.phases)
    radio = scenario.radio
    rates = radio.bandwidth * np.log2(1.0 + radio.snr_scale * np.abs(amp) ** 2)
    if not np.all(rates > 0):
        raise ObjectiveDomainError("non-positive rate at a finite-difference probe")
    r_min = rates.min(axis=1, keepdims=True)
    F = -r_min[:, 0] * np.sum((rates / r_min) ** sp.p, axis=1) ** (1.0 / sp.p)
    n = v.size
    return np.where(span > 0, (F[:n] - F[n:]) / np.where(span > 0, span, 1.0), 0.0)


def phase_gradient_from_channel(ch: ChannelRealization, phases, radio, p: float) -> np.ndarray:
    """Exact dF/dtheta for a fixed channel.

    With ``w[k, m] = cascade[k, m] * exp(j theta_m)`` and ``c_k = sum_m w[k, m]``,
    ``d|c_k|^2 / d theta_m = -2 Im(w[k, m] * conj(c_k))``. This is chained through
    ``R_k = B log2(1 + a |c_k|^2)`` and ``dF/dR_k = -(R_k / ||R||_p)**(p - 1)``.
    """
    phases = np.asarray(phases, dtype=float)
    w = ch.cascade * np.exp(1j * phases)[None, :]
    c = w.sum(axis=1)
    power = np.abs(c) ** 2
    a = radio.snr_scale
    rates = radio.bandwidth * np.log2(1.0 + a * power)
    norm = pnorm(rates, p)
    dF_dR = -((rates / norm) ** (p - 1.0))
    dR_dpow = radio.bandwidth * a / ((1.0 + a * power) * math.log(2.0))
    dpow_dtheta = -2.0 * np.imag(w * np.conj(c)[:, None])
    return (dF_dR * dR_dpow) @ dpow_dtheta


def analytic_phase_gradient(x: DecisionPoint, scenario: Scenario, sp: SmoothingParams = SmoothingParams()) -> np.ndarray:
    ch = assemble_channels(scenario, x.position, x.orientation)
    return phase_gradient_from_channel(ch, x.phases, scenario.radio, sp.p)


class RisProblem:
    """The smoothed problem expressed on unit-cube blocks, as the solver sees it.

    Each block is mapped affinely from its box onto ``[0, 1]^n`` and the
    objective is divided by ``scale`` (a positive constant, by default
    ``|F(x0)|`` supplied by the caller) so one proximal weight and one step
    schedule fit every block.
    """

    def __init__(
        self,
        scenario: Scenario,
        sp: SmoothingParams = SmoothingParams(),
        scale: float = 1.0,
        phase_gradient: str = "fd",
    ):
        if phase_gradient not in ("fd", "analytic"):
            raise ValueError(f"phase_gradient must be 'fd' or 'analytic', got {phase_gradient!r}")
        if not scale > 0:
            raise ValueError(f"objective scale must be positive, got {scale}")
        self.scenario = scenario
        self.sp = sp
        self.scale = float(scale)
        self.phase_gradient = phase_gradient
        self._native = [block_bounds(scenario, i) for i in BLOCKS]
        self._width = [hi - lo for lo, hi in self._native]
        self.lower = [np.zeros_like(lo) for lo, _ in self._native]
        self.upper = [np.where(w > 0, 1.0, 0.0) for w in self._width]
        self._cache: OrderedDict[bytes, ChannelRealization] = OrderedDict()
        self.evaluations = 0

    # coordinate maps
    def to_point(self, blocks) -> DecisionPoint:
        native = []
        for (lo, hi), w, u in zip(self._native, self._width, blocks):
            native.append(np.clip(lo + np.asarray(u) * w, lo, hi))
        return DecisionPoint(*native)

    def from_point(self, x: DecisionPoint) -> list[np.ndarray]:
        out = []
        for (lo, _), w, v in zip(self._native, self._width, x.blocks()):
            safe = np.where(w > 0, w, 1.0)
            out.append(np.where(w > 0, (v - lo) / safe, 0.0))
        return out

    def channel(self, position, orientation) -> ChannelRealization:
        key = np.concatenate([position, orientation]).tobytes()
        ch = self._cache.get(key)
        if ch is None:
            ch = assemble_channels(self.scenario, position, orientation)
            self._cache[key] = ch
            if len(self._cache) > 4:
                self._cache.popitem(last=False)
        else:
            self._cache.move_to_end(key)
        return ch

    def rates(self, x: DecisionPoint) -> np.ndarray:
        self.evaluations += 1
        return self.channel(x.position, x.orientation).rates(x.phases, self.scenario.radio)

    def native_objective(self, x: DecisionPoint) -> float:
        return smoothed_from_rates(self.rates(x), self.sp.p)

    # solver interface
    def objective(self, blocks) -> float:
        return self.native_objective(self.to_point(blocks)) / self.scale

    def gradient(self, blocks, i: int) -> np.ndarray:
        x = self.to_point(blocks)
        if i == PHASES and self.phase_gradient == "analytic":
            ch = self.channel(x.position, x.orientation)
            g = phase_gradient_from_channel(ch, x.phases, self.scenario.radio, self.sp.p)
        elif i in (POSITION, ORIENTATION):
            self.evaluations += 2 * len(self._width[i - 1])
            g = pose_fd_gradient(x, self.scenario, i, self.sp)
        else:
            g = fd_gradient(self.native_objective, x, i, self.sp, self._native[i - 1])
        return g * self._width[i - 1] / self.scale

    def metrics(self, blocks) -> dict[str, float]:
        r = self.rates(self.to_point(blocks))
        return {"min_rate": float(r.min()), "avg_rate": float(r.mean())}
