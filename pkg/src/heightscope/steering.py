"""Near-field and multipath steering vectors.

All steering phases use the convention exp(+j 2 pi d / lambda) with d the
exact Euclidean path length. Virtual (MIMO) vectors are Tx-major: entry
t * n_rx + q pairs Tx t with Rx q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Position3, TargetSpec, as_xyz, mirror_xyz, target_world_position

DEFAULT_WAVELENGTH = 0.0039  # 77 GHz automotive band


@dataclass(frozen=True)
class SpatialFrequencies:
    """Direction cosines (u, v) plus the vertical frequency w = sin(theta)."""

    u: float
    v: float
    w: float


def spatial_frequencies(azimuth: float, elevation: float) -> SpatialFrequencies:
    if abs(elevation) >= math.pi / 2:
        raise ValueError("elevation must satisfy |theta| < pi/2")
    return SpatialFrequencies(
        u=math.cos(elevation) * math.cos(azimuth),
        v=math.cos(elevation) * math.sin(azimuth),
        w=math.sin(elevation),
    )


def direction_vector(azimuth: float, elevation: float) -> np.ndarray:
    f = spatial_frequencies(azimuth, elevation)
    return np.array([f.u, f.v, f.w])


def path_phase(p: Position3, target: Position3, wavelength: float) -> complex:
    """Phase factor exp(j 2 pi |target - p| / lambda) of a single leg."""
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    d = p.distance_to(target)
    if d == 0.0:
        raise ValueError("zero path length: target coincides with antenna")
    return complex(np.exp(1j * 2.0 * math.pi * d / wavelength))


def near_field_distance(p, azimuth, elevation, slant_range, reference=None):
    """Path length via r * sqrt(1 - 2 n.p / r + |p|^2 / r^2).

    Algebraically identical to the Euclidean distance |r n - p|; kept as an
    independent evaluation route for cross-checks. `p` is taken relative to
    `reference` when one is given.
    """
    pos = as_xyz(p)
    if reference is not None:
        pos = pos - as_xyz(reference)
    n = direction_vector(azimuth, elevation)
    r = slant_range
    np_dot = pos @ n
    pp = np.sum(pos * pos, axis=1)
    return r * np.sqrt(1.0 - 2.0 * np_dot / r + pp / r ** 2)


def near_field_phase_closed_form(p, azimuth, elevation, slant_range,
                                 wavelength, reference=None):
    """Steering phase factor of :func:`near_field_distance`."""
    dist = near_field_distance(p, azimuth, elevation, slant_range, reference)
    out = np.exp(1j * 2.0 * math.pi * dist / wavelength)
    return out if out.size > 1 else complex(out[0])


def steering_to_point(positions, target: Position3, wavelength: float) -> np.ndarray:
    """Single-leg steering entries for a set of antennas toward a world point."""
    pos = as_xyz(positions)
    d = np.linalg.norm(pos - target.as_array()[None, :], axis=1)
    if np.any(d == 0.0):
        raise ValueError("zero path length: target coincides with an antenna")
    return np.exp(1j * 2.0 * math.pi * d / wavelength)


def _resolve_target(positions_list, azimuth, elevation, slant_range, reference):
    if reference is None:
        pos = np.vstack([as_xyz(p) for p in positions_list])
        reference = Position3(*pos.mean(axis=0))
    offset = slant_range * direction_vector(azimuth, elevation)
    return Position3(*(reference.as_array() + offset)), reference


def rx_steering(positions, azimuth, elevation, slant_range, wavelength,
                reference=None) -> np.ndarray:
    """Near-field receive steering vector; entries have unit modulus."""
    if len(as_xyz(positions)) == 0:
        raise ValueError("empty antenna set")
    target, _ = _resolve_target([positions], azimuth, elevation, slant_range,
                                reference)
    return steering_to_point(positions, target, wavelength)


def virtual_steering(tx_positions, rx_positions, azimuth, elevation,
                     slant_range, wavelength, reference=None) -> np.ndarray:
    """MIMO virtual steering vector a_Tx kron a_Rx (Tx-major)."""
    target, _ = _resolve_target([tx_positions, rx_positions], azimuth,
                                elevation, slant_range, reference)
    return virtual_steering_to_point(tx_positions, rx_positions, target,
                                     wavelength)


def virtual_steering_to_point(tx_positions, rx_positions, target,
                              wavelength) -> np.ndarray:
    a_tx = steering_to_point(tx_positions, target, wavelength)
    a_rx = steering_to_point(rx_positions, target, wavelength)
    return np.kron(a_tx, a_rx)


def multipath_components(tx_positions, rx_positions, target: Position3,
                         wavelength: float):
    """The four path components (DD, RD, DR, RR) without rho weights.

    Reflected legs are realized by mirroring the antenna through the ground
    plane, which keeps the target hypothesis in the upper half-space.
    """
    tx = as_xyz(tx_positions)
    rx = as_xyz(rx_positions)
    q = target.as_array()
    d_tx = np.linalg.norm(tx - q, axis=1)
    d_rx = np.linalg.norm(rx - q, axis=1)
    d_tx_m = np.linalg.norm(mirror_xyz(tx) - q, axis=1)
    d_rx_m = np.linalg.norm(mirror_xyz(rx) - q, axis=1)
    k = 2.0 * math.pi / wavelength

    def pair(dt, dr):
        return np.exp(1j * k * (dt[:, None] + dr[None, :])).reshape(-1)

    a_dd = pair(d_tx, d_rx)
    a_rd = pair(d_tx_m, d_rx)
    a_dr = pair(d_tx, d_rx_m)
    a_rr = pair(d_tx_m, d_rx_m)
    return a_dd, a_rd, a_dr, a_rr


def multipath_steering(tx_positions, rx_positions, azimuth, height,
                       slant_range, rho, wavelength,
                       reference=None) -> np.ndarray:
    """Four-path steering vector a_DD + rho (a_RD + a_DR) + rho^2 a_RR."""
    if height < 0:
        raise ValueError("height must be nonnegative")
    if abs(rho) > 1.0 + 1e-12:
        raise ValueError("reflection coefficient must satisfy |rho| <= 1")
    if reference is None:
        pos = np.vstack([as_xyz(tx_positions), as_xyz(rx_positions)])
        reference = Position3(*pos.mean(axis=0))
    target = target_world_position(
        TargetSpec(azimuth=azimuth, height=height, slant_range=slant_range),
        reference)
    return multipath_steering_to_point(tx_positions, rx_positions, target,
                                       rho, wavelength)


def multipath_steering_to_point(tx_positions, rx_positions, target, rho,
                                wavelength) -> np.ndarray:
    a_dd, a_rd, a_dr, a_rr = multipath_components(tx_positions, rx_positions,
                                                  target, wavelength)
    return a_dd + rho * (a_rd + a_dr) + rho ** 2 * a_rr


def uv_steering(positions, u, v, slant_range, wavelength,
                reference=None) -> np.ndarray:
    """Near-field steering over spatial frequencies with the vertical
    phase term sin(theta) z dropped (azimuth strategy over a (u, v) grid).

    The |p|^2 / r^2 curvature term is kept; only the w z contribution to
    n.p is set to zero, since it is absorbed by the reconstruction
    coefficients when there is no multipath.
    """
    pos = as_xyz(positions)
    if reference is None:
        reference = Position3(*pos.mean(axis=0))
    rel = pos - as_xyz(reference)
    r = slant_range
    np_dot = u * rel[:, 0] + v * rel[:, 1]
    pp = np.sum(rel * rel, axis=1)
    dist = r * np.sqrt(1.0 - 2.0 * np_dot / r + pp / r ** 2)
    return np.exp(1j * 2.0 * math.pi * dist / wavelength)


def uv_virtual_steering(tx_positions, rx_positions, u, v, slant_range,
                        wavelength, reference=None) -> np.ndarray:
    if reference is None:
        pos = np.vstack([as_xyz(tx_positions), as_xyz(rx_positions)])
        reference = Position3(*pos.mean(axis=0))
    a_tx = uv_steering(tx_positions, u, v, slant_range, wavelength, reference)
    a_rx = uv_steering(rx_positions, u, v, slant_range, wavelength, reference)
    return np.kron(a_tx, a_rx)
