"""Line-of-sight BS -> RIS -> user channel model and per-user rates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .geometry import (
    DegenerateGeometryError,
    bs_element_positions,
    link_angles,
    link_angles_many,
    ris_body_positions,
    ris_global_offsets,
    rotation_matrices,
)

if TYPE_CHECKING:
    from .scenario import Scenario


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class RadioParams:
    """Radio constants, all in linear units (W, Hz, m)."""

    wavelength: float = 0.15
    ref_gain: float = 1e-3  # -30 dB at 1 m
    tx_power: float = 1.0
    antenna_gain: float = db_to_linear(8.0)
    noise_power: float = dbm_to_watts(-100.0)
    bandwidth: float = 10e6

    def __post_init__(self):
        for name in ("wavelength", "ref_gain", "tx_power", "antenna_gain", "noise_power", "bandwidth"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite, got {value}")

    @property
    def snr_scale(self) -> float:
        """Multiplier turning ``|cascade|**2`` into an SNR."""
        return self.tx_power * self.antenna_gain / self.noise_power


def wave_vector(elevation: float, azimuth: float, wavelength: float) -> np.ndarray:
    ce = math.cos(elevation)
    k = 2.0 * math.pi / wavelength
    return k * np.array([ce * math.cos(azimuth), ce * math.sin(azimuth), math.sin(elevation)])


def array_response(positions, elevation: float, azimuth: float, wavelength: float) -> np.ndarray:
    """Steering vector ``exp(j s . p_i)`` over the given element positions."""
    pos = np.asarray(positions, dtype=float).reshape(-1, 3)
    return np.exp(1j * (pos @ wave_vector(elevation, azimuth, wavelength)))


def path_coefficient(distance: float, wavelength: float, ref_gain: float) -> complex:
    """Free-space LoS coefficient ``sqrt(ref_gain)/d * exp(-j 2 pi d / wavelength)``."""
    if not distance > 0:
        raise ValueError(f"link distance must be positive, got {distance}")
    return math.sqrt(ref_gain) / distance * np.exp(-2j * math.pi * distance / wavelength)


@dataclass(frozen=True)
class ChannelRealization:
    """All link quantities for one UAV pose.

    ``H`` is ``(M, N)``, ``g`` is ``(K, M)`` with row ``k`` the RIS -> user ``k``
    channel, ``f`` the unit-norm MRT beamformer. ``cascade`` holds the per-element
    terms ``g[k, m] * (H f)[m]`` so that the received amplitude for user ``k`` is
    ``sum_m cascade[k, m] * exp(j theta_m)``.
    """

    d_br: float
    d_rk: np.ndarray
    angles_bs_aod: tuple[float, float]
    angles_ris_aoa: tuple[float, float]
    angles_ris_aod: np.ndarray  # (K, 2) elevation, azimuth
    H: np.ndarray
    g: np.ndarray
    f: np.ndarray
    cascade: np.ndarray

    @property
    def n_users(self) -> int:
        return self.g.shape[0]

    def amplitudes(self, phases) -> np.ndarray:
        """Complex cascade scalar per user for phase vector ``phases``."""
        return self.cascade @ np.exp(1j * np.asarray(phases, dtype=float))

    def snr(self, phases, radio: RadioParams) -> np.ndarray:
        return radio.snr_scale * np.abs(self.amplitudes(phases)) ** 2

    def rates(self, phases, radio: RadioParams) -> np.ndarray:
        """Per-user rates in bit/s."""
        return radio.bandwidth * np.log2(1.0 + self.snr(phases, radio))


def assemble_channels(scenario: "Scenario", position, orientation) -> ChannelRealization:
    """Build every channel for the RIS at ``position`` with ``orientation``.

    Both ends of a link use the angles of the single propagation direction of
    that link (plane-wave model).
    """
    radio = scenario.radio
    lam = radio.wavelength
    p_r = np.asarray(position, dtype=float).reshape(3)
    p_b = scenario.bs.position
    users = scenario.users

    d_br = float(np.linalg.norm(p_r - p_b))
    if d_br == 0.0:
        raise DegenerateGeometryError("RIS coincides with the base station")
    d_rk = np.linalg.norm(users - p_r, axis=1)
    if np.any(d_rk == 0.0):
        raise DegenerateGeometryError("RIS coincides with a user")

    el_br, az_br = link_angles(p_b, p_r)
    offsets = ris_global_offsets(scenario.ris, orientation)

    a_tx_b = array_response(bs_element_positions(scenario.bs), el_br, az_br, lam)
    a_rx_r = array_response(offsets, el_br, az_br, lam)
    eta_br = path_coefficient(d_br, lam, radio.ref_gain)
    H = eta_br * np.outer(a_rx_r, a_tx_b.conj())
    f = a_tx_b / np.linalg.norm(a_tx_b)

    aod = link_angles_many(p_r, users)
    # Unit directions RIS -> user, scaled to wave vectors, one row per user.
    ce = np.cos(aod[:, 0])
    s_rk = (2.0 * math.pi / lam) * np.column_stack(
        [ce * np.cos(aod[:, 1]), ce * np.sin(aod[:, 1]), np.sin(aod[:, 0])]
    )
    eta_rk = np.sqrt(radio.ref_gain) / d_rk * np.exp(-2j * math.pi * d_rk / lam)
    g = eta_rk[:, None] * np.exp(-1j * (s_rk @ offsets.T))

    hf = H @ f
    cascade = g * hf[None, :]
    return ChannelRealization(
        d_br=d_br,
        d_rk=d_rk,
        angles_bs_aod=(el_br, az_br),
        angles_ris_aoa=(el_br, az_br),
        angles_ris_aod=aod,
        H=H,
        g=g,
        f=f,
        cascade=cascade,
    )


def _wave_vectors(d: np.ndarray, lam: float) -> np.ndarray:
    # Same angle route as link_angles, applied along the last axis.
    horiz = np.hypot(d[..., 0], d[..., 1])
    el = np.arctan2(d[..., 2], horiz)
    az = np.where(horiz > 0.0, np.arctan2(d[..., 1], d[..., 0]), 0.0)
    ce = np.cos(el)
    return (2.0 * math.pi / lam) * np.stack([ce * np.cos(az), ce * np.sin(az), np.sin(el)], axis=-1)


def cascade_many(scenario: "Scenario", positions, orientations) -> np.ndarray:
    """Cascade terms for a batch of poses, shape ``(P, K, M)``.

    Row ``i`` equals ``assemble_channels(scenario, positions[i], orientations[i]).cascade``
    up to round-off; used to evaluate many finite-difference probes at once.
    """
    radio = scenario.radio
    lam = radio.wavelength
    p_r = np.asarray(positions, dtype=float).reshape(-1, 3)
    d = p_r - scenario.bs.position
    d_br = np.linalg.norm(d, axis=1)
    if np.any(d_br == 0.0):
        raise DegenerateGeometryError("RIS coincides with the base station")
    s_br = _wave_vectors(d, lam)

    a_tx_b = np.exp(1j * (s_br @ bs_element_positions(scenario.bs).T))
    f = a_tx_b / np.linalg.norm(a_tx_b, axis=1, keepdims=True)
    a_f = np.sum(a_tx_b.conj() * f, axis=1)

    body = ris_body_positions(scenario.ris)
    rel = body - body[0]
    offsets = np.einsum("mj,pij->pmi", rel, rotation_matrices(orientations))
    a_rx = np.exp(1j * np.einsum("pmi,pi->pm", offsets, s_br))
    eta_br = np.sqrt(radio.ref_gain) / d_br * np.exp(-2j * math.pi * d_br / lam)
    hf = eta_br[:, None] * a_rx * a_f[:, None]

    dk = scenario.users[None, :, :] - p_r[:, None, :]
    d_rk = np.linalg.norm(dk, axis=2)
    if np.any(d_rk == 0.0):
        raise DegenerateGeometryError("RIS coincides with a user")
    s_rk = _wave_vectors(dk, lam)
    eta_rk = np.sqrt(radio.ref_gain) / d_rk * np.exp(-2j * math.pi * d_rk / lam)
    g = eta_rk[..., None] * np.exp(-1j * np.einsum("pki,pmi->pkm", s_rk, offsets))
    return g * hf[:, None, :]


def user_rate(ch: ChannelRealization, phases, k: int, radio: RadioParams) -> float:
    """Rate of user ``k`` (0-based) in bit/s, evaluated straight from ``g``, ``H``, ``f``."""
    if not 0 <= k < ch.n_users:
        raise IndexError(f"user index {k} outside 0..{ch.n_users - 1}")
    reflect = np.exp(1j * np.asarray(phases, dtype=float))
    amp = ch.g[k] @ (reflect * (ch.H @ ch.f))
    return float(radio.bandwidth * math.log2(1.0 + radio.snr_scale * abs(amp) ** 2))


def aligned_snr_bound(ch: ChannelRealization, k: int, radio: RadioParams) -> float:
    """Largest SNR user ``k`` can reach when every RIS term adds in phase."""
    m, n = ch.H.shape
    return radio.snr_scale * radio.ref_gain**2 * m**2 * n / (ch.d_br**2 * ch.d_rk[k] ** 2)


def aligned_phases(ch: ChannelRealization, k: int) -> np.ndarray:
    """Phases in ``[0, 2pi)`` that co-phase all cascade terms of user ``k``."""
    return np.mod(-np.angle(ch.cascade[k]), 2.0 * math.pi)
