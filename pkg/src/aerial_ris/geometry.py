"""Coordinate-frame math for the base-station array and the UAV-mounted RIS.

Positions are plain ``(3,)`` float arrays in meters; angles are radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi

# Feasible orientation box: roll, pitch in [0, pi/2], yaw in [0, 2pi].
ORIENTATION_LOWER = np.array([0.0, 0.0, 0.0])
ORIENTATION_UPPER = np.array([HALF_PI, HALF_PI, TWO_PI])


class DegenerateGeometryError(ValueError):
    """Two points that must be distinct coincide."""


@dataclass(frozen=True)
class Orientation:
    """Euler angles (XYZ convention) of the UAV body frame."""

    roll: float = 0.0
    pitch: float = 0.0
    yaw: float = 0.0

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "Orientation":
        roll, pitch, yaw = (float(v) for v in values)
        return cls(roll, pitch, yaw)

    def as_array(self) -> np.ndarray:
        return np.array([self.roll, self.pitch, self.yaw])

    def in_feasible_box(self) -> bool:
        a = self.as_array()
        return bool(np.all(a >= ORIENTATION_LOWER) and np.all(a <= ORIENTATION_UPPER))


@dataclass(frozen=True)
class BsArrayGeometry:
    """Vertical linear antenna array at the base station."""

    n_elements: int = 10
    width: float = 0.075
    spacing: float = 0.075
    position: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 68.0]))

    def __post_init__(self):
        if int(self.n_elements) < 1:
            raise ValueError(f"BS array needs at least one element, got {self.n_elements}")
        if not self.spacing > 0:
            raise ValueError(f"BS element spacing must be positive, got {self.spacing}")
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(3))


@dataclass(frozen=True)
class RisArrayGeometry:
    """Uniform rectangular RIS with ``n_h * n_v`` elements."""

    n_h: int = 5
    n_v: int = 4
    spacing_h: float = 0.075
    spacing_v: float = 0.075

    def __post_init__(self):
        if int(self.n_h) < 1 or int(self.n_v) < 1:
            raise ValueError(f"RIS needs n_h, n_v >= 1, got {self.n_h}x{self.n_v}")
        if not (self.spacing_h > 0 and self.spacing_v > 0):
            raise ValueError("RIS element spacings must be positive")

    @property
    def n_elements(self) -> int:
        return int(self.n_h) * int(self.n_v)


def _angles(orientation) -> tuple[float, float, float]:
    if isinstance(orientation, Orientation):
        return orientation.roll, orientation.pitch, orientation.yaw
    roll, pitch, yaw = np.asarray(orientation, dtype=float).reshape(3)
    return float(roll), float(pitch), float(yaw)


def rotation_matrix(orientation) -> np.ndarray:
    """Body-to-global rotation for roll/pitch/yaw in the XYZ convention.

    Equal to ``Rx(roll) @ Ry(pitch) @ Rz(yaw)``, written out entry by entry.
    """
    phi, theta, psi = _angles(orientation)
    cf, sf = math.cos(phi), math.sin(phi)
    ct, st = math.cos(theta), math.sin(theta)
    cp, sp = math.cos(psi), math.sin(psi)
    return np.array(
        [
            [ct * cp, -ct * sp, st],
            [cf * sp + cp * sf * st, cf * cp - sf * st * sp, -ct * sf],
            [sf * sp - cf * cp * st, cp * sf + cf * st * sp, cf * ct],
        ]
    )


def rotation_matrices(orientations) -> np.ndarray:
    """:func:`rotation_matrix` for a stack of ``(P, 3)`` angle triples, shape ``(P, 3, 3)``."""
    a = np.asarray(orientations, dtype=float).reshape(-1, 3)
    cf, sf = np.cos(a[:, 0]), np.sin(a[:, 0])
    ct, st = np.cos(a[:, 1]), np.sin(a[:, 1])
    cp, sp = np.cos(a[:, 2]), np.sin(a[:, 2])
    out = np.empty((a.shape[0], 3, 3))
    out[:, 0] = np.column_stack([ct * cp, -ct * sp, st])
    out[:, 1] = np.column_stack([cf * sp + cp * sf * st, cf * cp - sf * st * sp, -ct * sf])
    out[:, 2] = np.column_stack([sf * sp - cf * cp * st, cp * sf + cf * st * sp, cf * ct])
    return out


def bs_element_position(n: int, geometry: BsArrayGeometry) -> np.ndarray:
    """Global position of BS antenna ``n`` (1-based)."""
    if not 1 <= n <= geometry.n_elements:
        raise IndexError(f"BS element index {n} outside 1..{geometry.n_elements}")
    return np.array([geometry.width, 0.0, (n - 1) * geometry.spacing])


def bs_element_positions(geometry: BsArrayGeometry) -> np.ndarray:
    """All BS antenna positions, shape ``(N, 3)``."""
    n = np.arange(geometry.n_elements)
    out = np.zeros((geometry.n_elements, 3))
    out[:, 0] = geometry.width
    out[:, 2] = n * geometry.spacing
    return out


def ris_element_body_position(m: int, geometry: RisArrayGeometry) -> np.ndarray:
    """Body-frame position of RIS element ``m`` (1-based).

    The row index divides by ``n_v`` while the column index wraps modulo
    ``n_h``; for the default 5x4 panel this still gives 20 distinct points.
    """
    if not 1 <= m <= geometry.n_elements:
        raise IndexError(f"RIS element index {m} outside 1..{geometry.n_elements}")
    return np.array(
        [
            ((m - 1) // geometry.n_v) * geometry.spacing_v,
            ((m - 1) % geometry.n_h) * geometry.spacing_h,
            0.0,
        ]
    )


def ris_body_positions(geometry: RisArrayGeometry) -> np.ndarray:
    """All RIS element positions in the body frame, shape ``(M, 3)``."""
    idx = np.arange(geometry.n_elements)
    out = np.zeros((geometry.n_elements, 3))
    out[:, 0] = (idx // geometry.n_v) * geometry.spacing_v
    out[:, 1] = (idx % geometry.n_h) * geometry.spacing_h
    return out


def ris_global_offsets(geometry: RisArrayGeometry, orientation) -> np.ndarray:
    """Offsets of every RIS element from element 1, rotated into the global frame."""
    body = ris_body_positions(geometry)
    rel = body - body[0]
    return rel @ rotation_matrix(orientation).T


def link_angles(src, dst) -> tuple[float, float]:
    """Elevation and azimuth of the direction ``src -> dst``.

    The unit direction is ``[cos(el)cos(az), cos(el)sin(az), sin(el)]``.
    A purely vertical link has azimuth 0.
    """
    d = np.asarray(dst, dtype=float) - np.asarray(src, dtype=float)
    horiz = math.hypot(d[0], d[1])
    if horiz == 0.0 and d[2] == 0.0:
        raise DegenerateGeometryError(f"coincident link endpoints at {np.asarray(src).tolist()}")
    elevation = math.atan2(d[2], horiz)
    azimuth = math.atan2(d[1], d[0]) if horiz > 0.0 else 0.0
    return elevation, azimuth


def link_angles_many(src, dsts) -> np.ndarray:
    """Row-wise :func:`link_angles` from one source to many targets, shape ``(K, 2)``."""
    d = np.asarray(dsts, dtype=float).reshape(-1, 3) - np.asarray(src, dtype=float)
    horiz = np.hypot(d[:, 0], d[:, 1])
    if np.any((horiz == 0.0) & (d[:, 2] == 0.0)):
        raise DegenerateGeometryError("coincident link endpoints")
    elevation = np.arctan2(d[:, 2], horiz)
    azimuth = np.where(horiz > 0.0, np.arctan2(d[:, 1], d[:, 0]), 0.0)
    return np.column_stack([elevation, azimuth])


def unit_direction(elevation: float, azimuth: float) -> np.ndarray:
    ce = math.cos(elevation)
    return np.array([ce * math.cos(azimuth), ce * math.sin(azimuth), math.sin(elevation)])


def barycenter(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        raise ValueError("barycenter of an empty point set")
    return pts.reshape(-1, 3).mean(axis=0)
