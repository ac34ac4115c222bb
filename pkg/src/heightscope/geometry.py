"""World frame, antenna layouts and target placement.

Conventions: the ground plane is z = 0, the boresight (depth) axis is +x,
y is horizontal and z is height. All distances in meters, angles in radians
unless a function name says otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Position3:
    """A point in the world frame (x: depth, y: horizontal, z: height)."""

    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def distance_to(self, other: "Position3") -> float:
        return float(np.linalg.norm(self.as_array() - other.as_array()))


def as_xyz(positions) -> np.ndarray:
    """Coerce a Position3, a list of Position3, or an array into (n, 3)."""
    if isinstance(positions, Position3):
        return positions.as_array()[None, :]
    if isinstance(positions, np.ndarray):
        arr = np.atleast_2d(np.asarray(positions, dtype=float))
    else:
        arr = np.array([p.as_array() if isinstance(p, Position3) else p
                        for p in positions], dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"expected (n, 3) positions, got shape {arr.shape}")
    return arr


def mirror_point(p: Position3) -> Position3:
    """Reflect a point through the ground plane z = 0."""
    return Position3(p.x, p.y, -p.z)


def mirror_xyz(positions: np.ndarray) -> np.ndarray:
    """Array version of :func:`mirror_point` for (n, 3) inputs."""
    out = np.array(positions, dtype=float)
    out[..., 2] = -out[..., 2]
    return out


@dataclass(frozen=True)
class CoherentAperture:
    """One coherent Tx/Rx antenna group; relative phases inside it are measured."""

    tx: tuple
    rx: tuple
    id: str = "aperture"

    def __post_init__(self):
        if len(self.tx) == 0 or len(self.rx) == 0:
            raise ValueError("aperture needs at least one Tx and one Rx element")
        for name, elems in (("tx", self.tx), ("rx", self.rx)):
            seen = {(p.x, p.y, p.z) for p in elems}
            if len(seen) != len(elems):
                raise ValueError(f"duplicate {name} positions in aperture {self.id!r}")

    @property
    def n_virtual(self) -> int:
        return len(self.tx) * len(self.rx)

    def tx_xyz(self) -> np.ndarray:
        return as_xyz(self.tx)

    def rx_xyz(self) -> np.ndarray:
        return as_xyz(self.rx)

    def virtual_xyz(self) -> np.ndarray:
        """Sum-coarray virtual element positions, re-centered on the
        physical centroid. Tx-major ordering (all Rx for Tx 0 first)."""
        tx = self.tx_xyz()
        rx = self.rx_xyz()
        sums = (tx[:, None, :] + rx[None, :, :]).reshape(-1, 3)
        phys = np.vstack([tx, rx])
        return sums - sums.mean(axis=0) + phys.mean(axis=0)


@dataclass(frozen=True)
class AntennaLayout:
    """An ordered collection of mutually incoherent coherent apertures."""

    apertures: tuple
    name: str = "layout"
    # (min_xyz, max_xyz) boxes used by the preset containment checks
    physical_box: tuple = None
    virtual_box: tuple = None

    def __post_init__(self):
        if len(self.apertures) == 0:
            raise ValueError("layout needs at least one aperture")

    @property
    def n_virtual(self) -> int:
        return sum(a.n_virtual for a in self.apertures)

    def all_physical_xyz(self) -> np.ndarray:
        return np.vstack([np.vstack([a.tx_xyz(), a.rx_xyz()])
                          for a in self.apertures])

    def reference_point(self) -> Position3:
        c = self.all_physical_xyz().mean(axis=0)
        return Position3(*c)


@dataclass(frozen=True)
class TargetSpec:
    """Target parametrized by azimuth, height above ground and slant range."""

    azimuth: float
    height: float
    slant_range: float

    def __post_init__(self):
        if self.slant_range <= 0:
            raise ValueError("slant range must be positive")
        if self.height < 0:
            raise ValueError("height must be nonnegative")

    def elevation_from(self, ref: Position3) -> float:
        """Elevation angle seen from `ref` (positive above the horizontal)."""
        dz = self.height - ref.z
        if abs(dz) > self.slant_range:
            raise ValueError("height difference exceeds slant range")
        return math.asin(dz / self.slant_range)


def target_world_position(t: TargetSpec, ref: Position3) -> Position3:
    """Place a target at the given azimuth/height/slant-range from `ref`.

    Raises ValueError when the height difference exceeds the slant range
    (no point on the range sphere has that height).
    """
    dz = t.height - ref.z
    if abs(dz) > t.slant_range:
        raise ValueError(
            f"cannot place target: |height - ref.z| = {abs(dz):.3f} "
            f"exceeds slant range {t.slant_range:.3f}")
    ground = math.sqrt(t.slant_range ** 2 - dz ** 2)
    return Position3(ref.x + ground * math.cos(t.azimuth),
                     ref.y + ground * math.sin(t.azimuth),
                     t.height)


def _grid_1d(n: int, span: float) -> np.ndarray:
    """n points symmetric about 0 spanning `span` (single point at 0)."""
    if n == 1:
        return np.zeros(1)
    return np.linspace(-span / 2.0, span / 2.0, n)


def _cross_aperture(n_rows: int, n_cols: int, span: float, center_z: float,
                    label: str) -> CoherentAperture:
    """Tx on the vertical arm, Rx on the horizontal arm of a cross.

    The virtual array is the exact n_rows x n_cols tensor-product grid
    spanning `span` per axis.
    """
    tx = tuple(Position3(0.0, 0.0, center_z + dz)
               for dz in _grid_1d(n_rows, span))
    rx = tuple(Position3(0.0, dy, center_z)
               for dy in _grid_1d(n_cols, span))
    return CoherentAperture(tx=tx, rx=rx, id=label)


def _square_aperture(n_rows: int, n_cols: int, span: float, center_z: float,
                     label: str) -> CoherentAperture:
    """Tx along the left and top edges, Rx along the bottom and right edges.

    Corner positions are dropped from the second edge of each set so no two
    elements coincide. The exact coordinates are a documented generator, not
    a published design.
    """
    half = span / 2.0
    n_left = n_rows // 2
    n_top = n_rows - n_left
    n_bottom = n_cols // 2
    n_right = n_cols - n_bottom
    tx = [Position3(0.0, -half, center_z + dz) for dz in _grid_1d(n_left, span)]
    top_y = np.linspace(-half, half, n_top + 1)[1:]
    tx += [Position3(0.0, y, center_z + half) for y in top_y]
    rx = [Position3(0.0, y, center_z - half) for y in _grid_1d(n_bottom, span)]
    right_z = np.linspace(-half, half, n_right + 1)[1:]
    rx += [Position3(0.0, half, center_z + dz) for dz in right_z]
    return CoherentAperture(tx=tuple(tx), rx=tuple(rx), id=label)


def _box(center_z: float, half_y: float, half_z: float, depth: float = 1e-9):
    lo = np.array([-depth, -half_y - 1e-12, center_z - half_z - 1e-12])
    hi = np.array([depth, half_y + 1e-12, center_z + half_z + 1e-12])
    return (lo, hi)


def preset_layout(name: str) -> AntennaLayout:
    """Build one of the named antenna layouts.

    bumper_6x8   48-channel aperture, 10 cm x 10 cm virtual grid at z = 0.55 m
    roof_3x4     12-channel aperture, 5 cm x 5 cm virtual grid at z = 1.1 m
    cross_6x8    48-channel cross within an 11 cm footprint at z = 0.55 m
    cross_12x16  192-channel cross within an 11 cm footprint at z = 0.55 m
    square_6x8   48-channel edge design within an 11 cm footprint at z = 0.55 m
    square_12x16 192-channel edge design within an 11 cm footprint at z = 0.55 m
    """
    if name == "bumper_6x8":
        ap = _cross_aperture(6, 8, 0.10, 0.55, "bumper")
        return AntennaLayout((ap,), name=name,
                             physical_box=_box(0.55, 0.05, 0.05),
                             virtual_box=_box(0.55, 0.05, 0.05))
    if name == "roof_3x4":
        ap = _cross_aperture(3, 4, 0.05, 1.1, "roof")
        return AntennaLayout((ap,), name=name,
                             physical_box=_box(1.1, 0.025, 0.025),
                             virtual_box=_box(1.1, 0.025, 0.025))
    if name == "cross_6x8":
        ap = _cross_aperture(6, 8, 0.11, 0.55, "cross")
        return AntennaLayout((ap,), name=name,
                             physical_box=_box(0.55, 0.055, 0.055),
                             virtual_box=_box(0.55, 0.055, 0.055))
    if name == "cross_12x16":
        ap = _cross_aperture(12, 16, 0.11, 0.55, "cross")
        return AntennaLayout((ap,), name=name,
                             physical_box=_box(0.55, 0.055, 0.055),
                             virtual_box=_box(0.55, 0.055, 0.055))
    if name == "square_6x8":
        ap = _square_aperture(6, 8, 0.11, 0.55, "square")
        # edge placement roughly doubles the sum-coarray extent; the extra
        # slack covers the shift from re-centering on the physical centroid
        return AntennaLayout((ap,), name=name,
                             physical_box=_box(0.55, 0.055, 0.055),
                             virtual_box=_box(0.55, 0.12, 0.12))
    if name == "square_12x16":
        ap = _square_aperture(12, 16, 0.11, 0.55, "square")
        return AntennaLayout((ap,), name=name,
                             physical_box=_box(0.55, 0.055, 0.055),
                             virtual_box=_box(0.55, 0.12, 0.12))
    raise ValueError(f"unknown layout preset {name!r}")


PRESET_NAMES = ("bumper_6x8", "roof_3x4", "cross_6x8", "cross_12x16",
                "square_6x8", "square_12x16")


def combine_layouts(layouts, name: str = "combined") -> AntennaLayout:
    """Merge several layouts into one multi-aperture (incoherent) layout."""
    aps = []
    for i, lay in enumerate(layouts):
        for ap in lay.apertures:
            aps.append(CoherentAperture(tx=ap.tx, rx=ap.rx,
                                        id=f"{lay.name}/{ap.id}"))
    return AntennaLayout(tuple(aps), name=name)
