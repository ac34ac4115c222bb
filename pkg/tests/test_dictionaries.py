import math

import numpy as np
import pytest

from heightscope.dictionaries import (
    Dictionary,
    assemble_range_fusion,
    azimuth_dictionary_case_i,
    azimuth_dictionary_case_ii,
    azimuth_dictionary_case_iii,
    fused_labels,
    height_dictionary,
    height_labels,
    normalize_columns,
    normalize_signal,
)
from heightscope.geometry import AntennaLayout, preset_layout
from heightscope.steering import multipath_steering

LAM = 0.0039
AZ = np.deg2rad([-1.0, 0.0, 1.0])
HEIGHTS = np.array([0.2, 0.6, 1.0])
RHO = np.array([-0.3, -0.7])


@pytest.fixture(scope="module")
def layout():
    return preset_layout("bumper_6x8")


def test_height_dictionary_shape_and_order(layout):
    d = height_dictionary(AZ, HEIGHTS, RHO, layout, 100.0, LAM)
    assert d.matrix.shape == (48, len(AZ) * len(HEIGHTS) * len(RHO))
    assert d.info["nh"] == 3 and d.info["naz"] == 3 and d.info["nrho"] == 2
    # column order: rho outer, azimuth middle, height inner
    kind, h, phi, rho = d.column_meta[0]
    assert (kind, h, phi, rho) == ("h", 0.2, AZ[0], complex(RHO[0]))
    kind, h, phi, rho = d.column_meta[len(AZ) * len(HEIGHTS)]
    assert rho == complex(RHO[1])


def test_height_dictionary_columns_match_steering(layout):
    d = height_dictionary(AZ, HEIGHTS, RHO, layout, 100.0, LAM)
    ref = layout.reference_point()
    ap = layout.apertures[0]
    j = 7  # (rho[0], azimuth/height pair 7)
    _, h, phi, rho = d.column_meta[j]
    col = multipath_steering(ap.tx, ap.rx, phi, h, 100.0, rho, LAM,
                             reference=ref)
    assert np.allclose(d.matrix[:, j], col)


def test_height_labels_options():
    a = height_labels("a", 2, 3, 4)
    assert len(np.unique(a)) == 6 and a.size == 24
    b = height_labels("b", 2, 3, 4)
    assert len(np.unique(b)) == 24
    with pytest.raises(ValueError):
        height_labels("c", 2, 3, 4)
    assert fused_labels("a", 2, 3, 4, 2).size == 48


def test_azimuth_case_i_is_single_path(layout):
    flat = AntennaLayout((layout.apertures[0],), name="flat")
    # cross layout has mixed heights; case (i) requires a constant-z subset
    with pytest.raises(ValueError):
        azimuth_dictionary_case_i(AZ, flat, 100.0, LAM)


def test_azimuth_case_ii_bounds():
    from heightscope.geometry import CoherentAperture, Position3
    tx = tuple(Position3(0.0, y, 0.5) for y in (0.0, 0.02))
    rx = tuple(Position3(0.0, y, 0.5) for y in (0.0, 0.01, 0.03))
    lay = AntennaLayout((CoherentAperture(tx, rx),))
    uv = np.array([[0.9, 0.0]])
    d = azimuth_dictionary_case_ii(uv, lay, 100.0, LAM, theta_max=0.2)
    assert d.matrix.shape == (6, 1)
    with pytest.raises(ValueError):
        azimuth_dictionary_case_ii(np.array([[1.01, 0.0]]), lay, 100.0, LAM,
                                   theta_max=0.2)


def test_azimuth_case_iii_groups_pool_over_rho(layout):
    d = azimuth_dictionary_case_iii(AZ, HEIGHTS, RHO, layout, 100.0, LAM)
    assert d.n_columns == len(AZ) * len(HEIGHTS) * len(RHO)
    assert d.n_groups == len(AZ) * len(HEIGHTS)
    # same label for the same (azimuth, height) at both rho values
    assert d.labels[0] == d.labels[len(AZ) * len(HEIGHTS)]


def test_normalize_columns_and_scales(layout):
    d = height_dictionary(AZ, HEIGHTS, RHO, layout, 100.0, LAM)
    nd = normalize_columns(d)
    assert np.allclose(np.linalg.norm(nd.matrix, axis=0), 1.0)
    assert np.allclose(nd.scales * np.linalg.norm(nd.matrix, axis=0),
                       np.linalg.norm(d.matrix, axis=0))


def test_normalize_signal():
    y, scale = normalize_signal(np.array([3.0, 4.0j]))
    assert scale == pytest.approx(5.0)
    assert np.linalg.norm(y) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        normalize_signal(np.zeros(4))


def test_fusion_requires_consistent_hypotheses(layout):
    d1 = height_dictionary(AZ, HEIGHTS, RHO, layout, 100.0, LAM)
    d2 = height_dictionary(AZ, HEIGHTS, RHO, layout, 99.0, LAM)
    y = np.ones(48, dtype=complex)
    fused_y, fused = assemble_range_fusion([(y, d1), (y, d2)], option="a")
    assert fused.matrix.shape == (96, 2 * d1.n_columns)
    assert fused_y.shape == (96,)
    assert fused.n_groups == d1.n_columns // len(RHO)
    d3 = height_dictionary(AZ, HEIGHTS[:2], RHO, layout, 98.0, LAM)
    with pytest.raises(ValueError):
        assemble_range_fusion([(y, d1), (y, d3)])


def test_dictionary_validates_metadata_lengths():
    with pytest.raises(ValueError):
        Dictionary(np.zeros((4, 2)), column_meta=("a",),
                   labels=np.array([1, 2]))
