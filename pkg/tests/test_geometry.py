import math

import numpy as np
import pytest

from heightscope.geometry import (
    AntennaLayout,
    CoherentAperture,
    PRESET_NAMES,
    Position3,
    TargetSpec,
    as_xyz,
    combine_layouts,
    mirror_point,
    mirror_xyz,
    preset_layout,
    target_world_position,
)


def test_position_distance():
    a = Position3(0.0, 0.0, 0.0)
    b = Position3(3.0, 4.0, 0.0)
    assert a.distance_to(b) == pytest.approx(5.0)


def test_mirror_point_flips_height_only():
    p = Position3(1.0, -2.0, 0.7)
    m = mirror_point(p)
    assert (m.x, m.y, m.z) == (1.0, -2.0, -0.7)
    arr = mirror_xyz(np.array([[1.0, -2.0, 0.7]]))
    assert np.allclose(arr, [[1.0, -2.0, -0.7]])


def test_as_xyz_shapes():
    p = Position3(0.0, 1.0, 2.0)
    assert as_xyz(p).shape == (1, 3)
    assert as_xyz([p, p]).shape == (2, 3)
    with pytest.raises(ValueError):
        as_xyz(np.zeros((2, 2)))


def test_target_placement_respects_range_and_height():
    ref = Position3(0.0, 0.0, 0.5)
    t = TargetSpec(azimuth=0.1, height=1.0, slant_range=100.0)
    q = target_world_position(t, ref)
    assert q.z == pytest.approx(1.0)
    assert ref.distance_to(q) == pytest.approx(100.0)


def test_target_placement_rejects_impossible_height():
    ref = Position3(0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        target_world_position(TargetSpec(0.0, 5.0, 2.0), ref)


def test_elevation_sign():
    ref = Position3(0.0, 0.0, 1.0)
    below = TargetSpec(0.0, 0.2, 10.0)
    above = TargetSpec(0.0, 1.8, 10.0)
    assert below.elevation_from(ref) < 0
    assert above.elevation_from(ref) > 0


def test_aperture_rejects_duplicates():
    p = Position3(0.0, 0.0, 0.5)
    with pytest.raises(ValueError):
        CoherentAperture(tx=(p, p), rx=(p,))


def test_virtual_array_is_tx_major():
    tx = (Position3(0.0, 0.0, 0.0), Position3(0.0, 0.0, 0.1))
    rx = (Position3(0.0, 0.0, 0.0), Position3(0.0, 0.05, 0.0))
    ap = CoherentAperture(tx=tx, rx=rx)
    v = ap.virtual_xyz()
    assert v.shape == (4, 3)
    # entry t * n_rx + q: second block (t=1) differs from first in z only
    assert np.allclose(v[2] - v[0], [0.0, 0.0, 0.1])
    assert np.allclose(v[1] - v[0], [0.0, 0.05, 0.0])


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_presets_build_and_fit_boxes(name):
    layout = preset_layout(name)
    assert layout.n_virtual in (48, 12, 192)
    lo, hi = layout.physical_box
    phys = layout.all_physical_xyz()
    assert np.all(phys >= lo[None, :]) and np.all(phys <= hi[None, :])
    lo, hi = layout.virtual_box
    for ap in layout.apertures:
        v = ap.virtual_xyz()
        assert np.all(v >= lo[None, :]) and np.all(v <= hi[None, :])


def test_preset_channel_counts():
    assert preset_layout("bumper_6x8").n_virtual == 48
    assert preset_layout("roof_3x4").n_virtual == 12
    assert preset_layout("cross_12x16").n_virtual == 192
    with pytest.raises(ValueError):
        preset_layout("nope")


def test_combine_layouts_keeps_apertures_incoherent():
    both = combine_layouts([preset_layout("bumper_6x8"),
                            preset_layout("roof_3x4")])
    assert len(both.apertures) == 2
    assert both.n_virtual == 60
    ids = [ap.id for ap in both.apertures]
    assert len(set(ids)) == 2
