"""Ground-truth scenes, vehicle trajectories and noisy snapshot synthesis."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import CoherentAperture, Position3, TargetSpec, \
    target_world_position
from .steering import multipath_steering_to_point

HEIGHT_RANGE = (0.1, 1.35)  # scene protocol bounds for scatterer heights


@dataclass(frozen=True)
class Scatterer:
    azimuth: float
    height: float
    amplitude: complex = 1.0 + 0.0j


@dataclass(frozen=True)
class Scene:
    scatterers: tuple
    rho_true: complex = -0.6


@dataclass(frozen=True)
class Trajectory:
    """Decreasing slant ranges partitioned into filtering intervals."""

    ranges: np.ndarray
    intervals: tuple  # tuple of index arrays into `ranges`

    @property
    def n_intervals(self) -> int:
        return len(self.intervals)

    @property
    def points_per_interval(self) -> int:
        return len(self.intervals[0])


@dataclass(frozen=True)
class Snapshot:
    """One coherent measurement vector for (aperture, trajectory point)."""

    aperture_id: str
    point_index: int
    slant_range: float
    y: np.ndarray
    noise_variance: float


def make_trajectory(start: float = 160.0, end: float = 80.0,
                    interval: float = 8.0, step: float = 1.0) -> Trajectory:
    """Ranges from `start` down to just above `end` in `step` decrements,
    grouped into filtering intervals of `interval` meters."""
    if not (start > end > 0):
        raise ValueError("need start > end > 0")
    span = start - end
    n_int = span / interval
    if abs(n_int - round(n_int)) > 1e-9:
        raise ValueError("interval must divide start - end")
    per = interval / step
    if abs(per - round(per)) > 1e-9:
        raise ValueError("step must divide interval")
    n_int, per = int(round(n_int)), int(round(per))
    ranges = start - step * np.arange(n_int * per)
    intervals = tuple(np.arange(j * per, (j + 1) * per)
                      for j in range(n_int))
    return Trajectory(ranges=ranges, intervals=intervals)


def noise_variance_for_snr(snr_db: float) -> float:
    """Per-antenna complex noise variance for a unit-power source."""
    return 10.0 ** (-snr_db / 10.0)


def synthesize_snapshot(scene: Scene, aperture: CoherentAperture,
                        reference: Position3, slant_range: float,
                        wavelength: float, snr_db, rng: np.random.Generator,
                        point_index: int = 0) -> Snapshot:
    """One noisy coherent measurement under the four-path forward model.

    A fresh uniform initial phase is drawn per call (per aperture and
    trajectory point). `snr_db=None` produces a noiseless snapshot.
    """
    m = aperture.n_virtual
    y = np.zeros(m, dtype=complex)
    for s in scene.scatterers:
        target = target_world_position(
            TargetSpec(s.azimuth, s.height, slant_range), reference)
        y += s.amplitude * multipath_steering_to_point(
            aperture.tx, aperture.rx, target, scene.rho_true, wavelength)
    psi0 = rng.uniform(0.0, 2.0 * math.pi)
    y *= np.exp(1j * psi0)
    if snr_db is None or np.isinf(snr_db):
        sigma2 = 0.0
    else:
        sigma2 = noise_variance_for_snr(float(snr_db))
        noise = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        y += math.sqrt(sigma2 / 2.0) * noise
    return Snapshot(aperture_id=aperture.id, point_index=point_index,
                    slant_range=slant_range, y=y, noise_variance=sigma2)


def _snap(value: float, grid: np.ndarray) -> float:
    return float(grid[np.argmin(np.abs(np.asarray(grid) - value))])


def random_scene(n_targets: int, rng: np.random.Generator,
                 mode: str = "same_azimuth",
                 azimuth_grid=None, height_grid=None,
                 rho_true: complex = -0.6,
                 snap_on_grid: bool = True, rho_grid=None) -> Scene:
    """Random scatterers with heights uniform in [0.1, 1.35] m.

    `same_azimuth` pins all targets to one azimuth bin (the 1-D study);
    `2d` draws independent azimuths over the grid extent. Truth values are
    snapped onto the hypothesis grids unless `snap_on_grid` is False;
    passing `rho_grid` additionally snaps the ground reflection coefficient
    to the nearest grid value (for fully on-grid scenes).
    """
    if n_targets not in (1, 2):
        raise ValueError("n_targets must be 1 or 2")
    if mode not in ("same_azimuth", "2d"):
        raise ValueError(f"unknown scene mode {mode!r}")
    azimuth_grid = np.asarray(azimuth_grid if azimuth_grid is not None
                              else [0.0], dtype=float)
    lo, hi = HEIGHT_RANGE
    if mode == "same_azimuth":
        phi = _snap(rng.uniform(azimuth_grid.min(), azimuth_grid.max()),
                    azimuth_grid) if azimuth_grid.size > 1 else float(azimuth_grid[0])
        azimuths = [phi] * n_targets
    else:
        azimuths = [rng.uniform(azimuth_grid.min(), azimuth_grid.max())
                    for _ in range(n_targets)]
        if snap_on_grid:
            azimuths = [_snap(a, azimuth_grid) for a in azimuths]
    scatterers = []
    for i in range(n_targets):
        h = rng.uniform(lo, hi)
        if snap_on_grid and height_grid is not None:
            h = _snap(h, np.asarray(height_grid))
        amp = complex(np.exp(1j * rng.uniform(0.0, 2.0 * math.pi)))
        scatterers.append(Scatterer(azimuth=azimuths[i], height=h,
                                    amplitude=amp))
    if snap_on_grid and rho_grid is not None:
        grid = np.asarray(rho_grid, dtype=complex)
        rho_true = complex(grid[np.argmin(np.abs(grid - rho_true))])
    return Scene(scatterers=tuple(scatterers), rho_true=rho_true)


def trial_rng(master_seed: int, *stream) -> np.random.Generator:
    """Independent generator for one trial, derived from the master seed.

    Streams are identified by integer tuples (e.g. snr index, trial index),
    so results do not depend on scheduling or worker count.
    """
    return np.random.default_rng(np.random.SeedSequence([int(master_seed),
                                                         *map(int, stream)]))
