import numpy as np
import pytest

from heightscope.baselines import (
    burg_ar,
    burg_spectrum,
    envelope_series,
    estimate_height,
    music_spectrum,
    peak_frequency,
    peak_to_height,
)


def _tone_series(freq_m, n=80, r0=160.0, r1=80.0, ha=1.1):
    inv = np.linspace(1.0 / r0, 1.0 / r1, n)
    x = 2.0 + np.cos(2.0 * np.pi * freq_m * inv)
    return envelope_series(x, 1.0 / inv, ha)


def test_envelope_series_uniform_inverse_range_grid():
    ranges = np.linspace(160.0, 81.0, 80)
    vals = np.exp(1j * np.linspace(0, 5, 80))
    s = envelope_series(vals, ranges, 1.1)
    d = np.diff(s.inverse_ranges)
    assert np.allclose(d, d[0])
    assert s.samples.shape == (80,)
    with pytest.raises(ValueError):
        envelope_series(vals[:3], ranges[:3], 1.1)


def test_burg_ar_whitens_an_ar_process():
    rng = np.random.default_rng(0)
    # AR(2): x_t = 1.3 x_{t-1} - 0.6 x_{t-2} + e_t
    n = 4000
    x = np.zeros(n)
    e = rng.standard_normal(n)
    for t in range(2, n):
        x[t] = 1.3 * x[t - 1] - 0.6 * x[t - 2] + e[t]
    a, energy, clamped = burg_ar(x, 2)
    assert not clamped
    assert a[1] == pytest.approx(-1.3, abs=0.05)
    assert a[2] == pytest.approx(0.6, abs=0.05)
    assert energy == pytest.approx(1.0, rel=0.1)
    with pytest.raises(ValueError):
        burg_ar(x[:6], 4)


def test_spectra_locate_a_planted_envelope_tone():
    f_true = 300.0
    s = _tone_series(f_true)
    for spec in (music_spectrum(s), burg_spectrum(s)):
        f_hat = peak_frequency(spec)
        assert f_hat == pytest.approx(f_true, rel=0.05)


def test_peak_to_height_inversion():
    lam, ha = 0.0039, 1.1
    h = 0.5
    f = 2.0 * ha * h / lam
    assert peak_to_height(f, lam, ha) == pytest.approx(h)
    with pytest.raises(ValueError):
        peak_to_height(-1.0, lam, ha)
    with pytest.raises(ValueError):
        peak_to_height(f, lam, 0.0)


def test_estimate_height_round_trip():
    lam, ha = 0.0039, 1.1
    h = 0.7
    s = _tone_series(2.0 * ha * h / lam)
    for method in ("music", "burg"):
        assert estimate_height(s, lam, method=method) == pytest.approx(
            h, abs=0.03)
    with pytest.raises(ValueError):
        estimate_height(s, lam, method="welch")


def test_music_spectrum_validates_dimensions():
    s = _tone_series(300.0)
    with pytest.raises(ValueError):
        music_spectrum(s, subspace_dim=0)
    with pytest.raises(ValueError):
        music_spectrum(s, subspace_dim=2, hankel_rows=2)
    with pytest.raises(ValueError):
        music_spectrum(s, subspace_dim=2, hankel_rows=80)
