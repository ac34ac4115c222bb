"""Sensing-matrix construction, group label vectors and normalization."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .geometry import AntennaLayout, Position3, TargetSpec, as_xyz, \
    mirror_xyz, target_world_position
from .steering import direction_vector, uv_virtual_steering


@dataclass(frozen=True)
class Dictionary:
    """A sensing matrix with per-column hypothesis metadata and group labels.

    labels are 1-based group ids; columns sharing a label form one group of
    the block-sparse penalty. `scales` records per-column normalization
    factors (None when the matrix is unnormalized). `info` carries the grid
    counts (nh, naz, nrho, ...) needed for map pooling.
    """

    matrix: np.ndarray
    column_meta: tuple
    labels: np.ndarray
    scales: np.ndarray = None
    info: dict = None

    def __post_init__(self):
        if self.matrix.shape[1] != len(self.column_meta):
            raise ValueError("column_meta length must match column count")
        if self.matrix.shape[1] != len(self.labels):
            raise ValueError("labels length must match column count")

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_columns(self) -> int:
        return self.matrix.shape[1]

    @property
    def n_groups(self) -> int:
        return len(np.unique(self.labels))


def _pair_phase_blocks(aperture, targets_xyz: np.ndarray, wavelength: float):
    """Per Tx-Rx pair phase matrices for the 4 path combinations.

    Returns (P_dd, P_rd, P_dr, P_rr), each (n_virtual, n_targets), Tx-major.
    """
    tx = aperture.tx_xyz()
    rx = aperture.rx_xyz()
    k = 2.0 * math.pi / wavelength

    def legs(ants):
        return np.linalg.norm(ants[:, None, :] - targets_xyz[None, :, :], axis=2)

    d_tx, d_rx = legs(tx), legs(rx)
    d_tx_m, d_rx_m = legs(mirror_xyz(tx)), legs(mirror_xyz(rx))

    def pair(dt, dr):
        nt, nc = dt.shape
        total = dt[:, None, :] + dr[None, :, :]
        return np.exp(1j * k * total).reshape(nt * dr.shape[0], nc)

    return (pair(d_tx, d_rx), pair(d_tx_m, d_rx),
            pair(d_tx, d_rx_m), pair(d_tx_m, d_rx_m))


def _stacked_pair_blocks(layout: AntennaLayout, targets_xyz, wavelength):
    blocks = [_pair_phase_blocks(ap, targets_xyz, wavelength)
              for ap in layout.apertures]
    return tuple(np.vstack([b[i] for b in blocks]) for i in range(4))


def _require_constant_height(layout: AntennaLayout):
    z = layout.all_physical_xyz()[:, 2]
    if np.ptp(z) > 1e-9:
        raise ValueError("azimuth strategies (i)/(ii) require antennas at a "
                         "common height")


def azimuth_dictionary_case_i(azimuth_grid, layout: AntennaLayout,
                              slant_range, wavelength,
                              reference: Position3 = None) -> Dictionary:
    """Single-path azimuth dictionary with elevation fixed at 0.

    One column (and one singleton group) per azimuth bin.
    """
    azimuth_grid = np.asarray(azimuth_grid, dtype=float)
    if azimuth_grid.size == 0:
        raise ValueError("empty azimuth grid")
    _require_constant_height(layout)
    if reference is None:
        reference = layout.reference_point()
    targets = np.array([
        reference.as_array() + slant_range * direction_vector(phi, 0.0)
        for phi in azimuth_grid])
    p_dd, _, _, _ = _stacked_pair_blocks(layout, targets, wavelength)
    meta = tuple(("az", float(phi)) for phi in azimuth_grid)
    labels = np.arange(1, azimuth_grid.size + 1)
    return Dictionary(p_dd, meta, labels,
                      info={"kind": "azimuth_i", "naz": azimuth_grid.size})


def azimuth_dictionary_case_ii(uv_grid, layout: AntennaLayout, slant_range,
                               wavelength, theta_max,
                               reference: Position3 = None) -> Dictionary:
    """Azimuth dictionary over (u, v) spatial-frequency hypotheses."""
    uv = np.atleast_2d(np.asarray(uv_grid, dtype=float))
    if uv.size == 0:
        raise ValueError("empty (u, v) grid")
    _require_constant_height(layout)
    bound = math.cos(theta_max)
    if np.any(np.abs(uv) > bound + 1e-12):
        raise ValueError("(u, v) grid point outside the admissible square "
                         f"[-cos(theta_max), cos(theta_max)] = [{-bound:.6f}, {bound:.6f}]")
    if reference is None:
        reference = layout.reference_point()
    cols = []
    for u, v in uv:
        col = np.concatenate([
            uv_virtual_steering(ap.tx, ap.rx, u, v, slant_range, wavelength,
                                reference=reference)
            for ap in layout.apertures])
        cols.append(col)
    matrix = np.stack(cols, axis=1)
    meta = tuple(("uv", float(u), float(v)) for u, v in uv)
    labels = np.arange(1, uv.shape[0] + 1)
    return Dictionary(matrix, meta, labels,
                      info={"kind": "azimuth_ii", "naz": uv.shape[0]})


def _multipath_matrix(layout, targets_xyz, rho_grid, wavelength):
    """Columns over the (rho outer, target inner) product grid."""
    p_dd, p_rd, p_dr, p_rr = _stacked_pair_blocks(layout, targets_xyz,
                                                  wavelength)
    cross = p_rd + p_dr
    blocks = [p_dd + rho * cross + rho ** 2 * p_rr for rho in rho_grid]
    return np.hstack(blocks)


def azimuth_dictionary_case_iii(azimuth_grid, coarse_heights, rho_grid,
                                layout: AntennaLayout, slant_range,
                                wavelength,
                                reference: Position3 = None) -> Dictionary:
    """Multipath azimuth dictionary over the fine-azimuth x coarse-height x
    rho product grid. Columns sharing (azimuth, height) across rho share a
    group, so azimuth detection pools over the reflection coefficient."""
    azimuth_grid = np.asarray(azimuth_grid, dtype=float)
    coarse_heights = np.asarray(coarse_heights, dtype=float)
    rho_grid = np.asarray(rho_grid, dtype=complex)
    if reference is None:
        reference = layout.reference_point()
    hyp = [(phi, h) for phi in azimuth_grid for h in coarse_heights]
    targets = np.array([
        target_world_position(TargetSpec(phi, h, slant_range), reference).as_array()
        for phi, h in hyp])
    matrix = _multipath_matrix(layout, targets, rho_grid, wavelength)
    meta = tuple(("az_h_rho", float(phi), float(h), complex(rho))
                 for rho in rho_grid for phi, h in hyp)
    base = np.arange(1, len(hyp) + 1)
    labels = np.tile(base, rho_grid.size)
    return Dictionary(matrix, meta, labels,
                      info={"kind": "azimuth_iii", "naz": azimuth_grid.size,
                            "nh": coarse_heights.size, "nrho": rho_grid.size})


def height_dictionary(detected_azimuths, height_grid, rho_grid,
                      layout: AntennaLayout, slant_range, wavelength,
                      reference: Position3 = None,
                      labels_option: str = "a") -> Dictionary:
    """Multipath height dictionary.

    Column ordering is [A_{phi_1,rho_1} ... A_{phi_naz,rho_1} ... A_{phi_naz,
    rho_nrho}] with each block A = [a(h_1) ... a(h_nh)], over all virtual
    channels of all apertures of `layout`.
    """
    azimuths = np.asarray(detected_azimuths, dtype=float)
    if azimuths.size == 0:
        raise ValueError("no detected azimuth bins")
    heights = np.asarray(height_grid, dtype=float)
    rho_grid = np.asarray(rho_grid, dtype=complex)
    if reference is None:
        reference = layout.reference_point()
    hyp = [(phi, h) for phi in azimuths for h in heights]
    targets = np.array([
        target_world_position(TargetSpec(phi, h, slant_range), reference).as_array()
        for phi, h in hyp])
    matrix = _multipath_matrix(layout, targets, rho_grid, wavelength)
    meta = tuple(("h", float(h), float(phi), complex(rho))
                 for rho in rho_grid for phi, h in hyp)
    labels = height_labels(labels_option, heights.size, azimuths.size,
                           rho_grid.size)
    return Dictionary(matrix, meta, labels,
                      info={"kind": "height", "nh": heights.size,
                            "naz": azimuths.size, "nrho": rho_grid.size,
                            "heights": heights, "azimuths": azimuths,
                            "labels_option": labels_option})


def height_labels(option: str, nh: int, naz: int, nrho: int) -> np.ndarray:
    """Group label vector for a height dictionary.

    Option "a" shares a group across rho for each (height, azimuth) pair;
    option "b" gives every column its own group.
    """
    if min(nh, naz, nrho) < 1:
        raise ValueError("grid counts must be positive")
    if option == "a":
        return np.tile(np.arange(1, nh * naz + 1), nrho)
    if option == "b":
        return np.arange(1, nh * naz * nrho + 1)
    raise ValueError(f"unknown labels option {option!r}")


def fused_labels(option: str, nh: int, naz: int, nrho: int,
                 n_systems: int) -> np.ndarray:
    """Label vector for `n_systems` block-diagonally fused height systems."""
    return np.tile(height_labels(option, nh, naz, nrho), n_systems)


def assemble_range_fusion(systems, option: str = "a"):
    """Stack (y_i, Dictionary_i) pairs into one block-diagonal system.

    All systems must share identical column hypothesis metadata (hypothesis
    consistency); group labels couple the same (height, azimuth) hypothesis
    across all points.
    """
    if len(systems) == 0:
        raise ValueError("nothing to fuse")
    ys = [np.asarray(y, dtype=complex) for y, _ in systems]
    dicts = [d for _, d in systems]
    ref_meta = dicts[0].column_meta
    for d in dicts[1:]:
        if d.column_meta != ref_meta:
            raise ValueError("hypothesis metadata mismatch between fused "
                             "systems")
    info = dict(dicts[0].info or {})
    nh, naz, nrho = info["nh"], info["naz"], info["nrho"]
    y = np.concatenate(ys)
    matrix = scipy.linalg.block_diag(*[d.matrix for d in dicts])
    labels = fused_labels(option, nh, naz, nrho, len(systems))
    meta = tuple(m for d in dicts for m in d.column_meta)
    info.update(n_systems=len(systems), labels_option=option)
    scales = None
    if all(d.scales is not None for d in dicts):
        scales = np.concatenate([d.scales for d in dicts])
    fused = Dictionary(matrix, meta, labels, scales=scales, info=info)
    return y, fused


def normalize_columns(dictionary: Dictionary) -> Dictionary:
    """Return a copy with unit 2-norm columns; scales record the norms."""
    norms = np.linalg.norm(dictionary.matrix, axis=0)
    if np.any(norms == 0.0):
        raise ValueError("dictionary has a zero column")
    return replace(dictionary, matrix=dictionary.matrix / norms[None, :],
                   scales=norms)


def normalize_signal(y: np.ndarray):
    """Scale a measurement to unit norm; returns (normalized, scale)."""
    y = np.asarray(y, dtype=complex)
    n = float(np.linalg.norm(y))
    if n == 0.0:
        raise ValueError("cannot normalize a zero signal")
    return y / n, n
