import numpy as np
import pytest

from heightscope.geometry import Position3, preset_layout
from heightscope.synthesis import (
    HEIGHT_RANGE,
    Scatterer,
    Scene,
    make_trajectory,
    noise_variance_for_snr,
    random_scene,
    synthesize_snapshot,
    trial_rng,
)


def test_trajectory_partition():
    traj = make_trajectory(160.0, 80.0, 8.0, 1.0)
    assert traj.ranges[0] == 160.0
    assert traj.ranges[-1] == 81.0
    assert traj.n_intervals == 10
    assert traj.points_per_interval == 8
    flat = np.concatenate(traj.intervals)
    assert np.array_equal(flat, np.arange(80))


def test_trajectory_validates_divisibility():
    with pytest.raises(ValueError):
        make_trajectory(160.0, 80.0, 7.0, 1.0)
    with pytest.raises(ValueError):
        make_trajectory(160.0, 80.0, 8.0, 3.0)
    with pytest.raises(ValueError):
        make_trajectory(80.0, 160.0, 8.0, 1.0)


def test_trial_rng_streams_independent_and_reproducible():
    a1 = trial_rng(7, 0, 3).standard_normal(4)
    a2 = trial_rng(7, 0, 3).standard_normal(4)
    b = trial_rng(7, 0, 4).standard_normal(4)
    assert np.array_equal(a1, a2)
    assert not np.array_equal(a1, b)


def test_snapshot_noiseless_magnitude_is_phase_invariant():
    layout = preset_layout("bumper_6x8")
    ap = layout.apertures[0]
    ref = layout.reference_point()
    scene = Scene((Scatterer(0.0, 0.8),), rho_true=-0.6)
    s1 = synthesize_snapshot(scene, ap, ref, 100.0, 0.0039, None,
                             trial_rng(0, 0))
    s2 = synthesize_snapshot(scene, ap, ref, 100.0, 0.0039, None,
                             trial_rng(0, 1))
    assert s1.noise_variance == 0.0
    # different random initial phases, same magnitudes
    assert np.allclose(np.abs(s1.y), np.abs(s2.y))
    assert not np.allclose(s1.y, s2.y)


def test_snapshot_noise_variance_scaling():
    layout = preset_layout("bumper_6x8")
    ap = layout.apertures[0]
    ref = layout.reference_point()
    scene = Scene((), rho_true=-0.6)
    rng = trial_rng(1, 0)
    snap = synthesize_snapshot(scene, ap, ref, 100.0, 0.0039, 0.0, rng)
    assert snap.noise_variance == pytest.approx(1.0)
    assert noise_variance_for_snr(10.0) == pytest.approx(0.1)
    # empirical noise power close to sigma^2 over many draws
    powers = []
    for t in range(200):
        s = synthesize_snapshot(scene, ap, ref, 100.0, 0.0039, 3.0,
                                trial_rng(1, t))
        powers.append(np.mean(np.abs(s.y) ** 2))
    assert np.mean(powers) == pytest.approx(noise_variance_for_snr(3.0),
                                            rel=0.05)


def test_random_scene_bounds_and_snapping():
    heights = np.arange(0.0, 1.51, 0.02)
    rho_grid = [-0.1, -0.3, -0.5, -0.7, -0.9]
    rng = trial_rng(2, 0)
    for _ in range(20):
        sc = random_scene(1, rng, azimuth_grid=np.array([0.0]),
                          height_grid=heights, rho_true=-0.6,
                          rho_grid=rho_grid)
        s = sc.scatterers[0]
        assert HEIGHT_RANGE[0] - 0.011 <= s.height <= HEIGHT_RANGE[1] + 0.011
        assert np.any(np.isclose(heights, s.height))
        assert sc.rho_true in (-0.5, -0.7)
        assert abs(s.amplitude) == pytest.approx(1.0)


def test_random_scene_two_targets_share_azimuth():
    rng = trial_rng(3, 0)
    az = np.deg2rad(np.arange(-10, 10.2, 0.2))
    sc = random_scene(2, rng, mode="same_azimuth", azimuth_grid=az,
                      height_grid=np.arange(0.0, 1.51, 0.02))
    assert sc.scatterers[0].azimuth == sc.scatterers[1].azimuth
    sc2d = random_scene(2, rng, mode="2d", azimuth_grid=az,
                        height_grid=np.arange(0.0, 1.51, 0.02))
    assert len(sc2d.scatterers) == 2
    with pytest.raises(ValueError):
        random_scene(3, rng)
    with pytest.raises(ValueError):
        random_scene(1, rng, mode="3d")
