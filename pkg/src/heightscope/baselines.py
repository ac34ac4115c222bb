"""Interference-envelope PSD baselines (Burg and MUSIC) for height estimation.

The received power of a low scatterer over a reflecting ground is periodic
in the inverse range 1/R. For a single scatterer the envelope frequency f
(in cycles per unit 1/R, i.e. in meters) relates to the target height via
f = 2 h_a h_t / lambda, with h_a the antenna height. Both estimators work
on a mean-removed envelope resampled uniformly in 1/R.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg


@dataclass(frozen=True)
class EnvelopeSeries:
    """Power samples on a uniform inverse-range grid."""

    samples: np.ndarray
    inverse_ranges: np.ndarray
    antenna_height: float

    @property
    def spacing(self) -> float:
        return float(self.inverse_ranges[1] - self.inverse_ranges[0])

    @property
    def span(self) -> float:
        return float(self.inverse_ranges[-1] - self.inverse_ranges[0])


def envelope_series(values, ranges, antenna_height: float,
                    resample_n: int = None) -> EnvelopeSeries:
    """Per-point power |y|^2 re-interpolated onto a uniform 1/R grid.

    `values` holds one complex (or real power) sample per trajectory point
    at slant ranges `ranges`.
    """
    values = np.asarray(values)
    ranges = np.asarray(ranges, dtype=float)
    if values.shape[0] != ranges.shape[0]:
        raise ValueError("one sample per range required")
    if values.shape[0] < 4:
        raise ValueError("need at least 4 trajectory points")
    power = np.abs(values) ** 2 if np.iscomplexobj(values) else np.asarray(
        values, dtype=float)
    inv = 1.0 / ranges
    order = np.argsort(inv)
    inv, power = inv[order], power[order]
    if resample_n is None:
        resample_n = len(power)
    grid = np.linspace(inv[0], inv[-1], resample_n)
    resampled = np.interp(grid, inv, power)
    return EnvelopeSeries(samples=resampled, inverse_ranges=grid,
                          antenna_height=antenna_height)


def burg_ar(series_values, order: int):
    """Burg forward-backward AR fit.

    Returns (coefficients a with a[0] = 1, prediction error power,
    clamped flag). Reflection coefficients with |k| >= 1 are clamped just
    inside the unit circle and flagged.
    """
    x = np.asarray(series_values, dtype=float)
    n = x.size
    if order >= n / 2:
        raise ValueError("AR order must be below half the sample count")
    ef = x.copy()
    eb = x.copy()
    a = np.array([1.0])
    energy = float(np.dot(x, x)) / n
    clamped = False
    for m in range(1, order + 1):
        f = ef[m:]
        b = eb[m - 1:n - 1]
        den = float(np.dot(f, f) + np.dot(b, b))
        k = 0.0 if den <= 0.0 else -2.0 * float(np.dot(f, b)) / den
        if abs(k) >= 1.0:
            k = math.copysign(1.0 - 1e-9, k)
            clamped = True
        a = np.concatenate([a, [0.0]]) + k * np.concatenate([[0.0], a[::-1]])
        f_new = f + k * b
        b_new = b + k * f
        ef[m:] = f_new
        eb[m:] = b_new
        energy *= max(1.0 - k * k, 1e-12)
    return a, energy, clamped


@dataclass(frozen=True)
class Spectrum:
    frequencies: np.ndarray  # cycles per unit 1/R, i.e. meters
    power: np.ndarray
    degenerate: bool = False


def _frequency_grid(series: EnvelopeSeries, n_freq: int,
                    min_cycles: float) -> np.ndarray:
    nyquist = 0.5 / series.spacing
    f_min = min_cycles / series.span
    return np.linspace(f_min, nyquist, n_freq)


def burg_spectrum(series: EnvelopeSeries, order: int = 4, n_freq: int = 2048,
                  min_cycles: float = 0.5) -> Spectrum:
    """AR power spectral density of the mean-removed envelope."""
    x = series.samples - series.samples.mean()
    a, energy, clamped = burg_ar(x, order)
    freqs = _frequency_grid(series, n_freq, min_cycles)
    z = np.exp(-2j * math.pi * freqs[:, None] * series.spacing
               * np.arange(a.size)[None, :])
    denom = np.abs(z @ a) ** 2
    psd = energy * series.spacing / np.maximum(denom, 1e-30)
    return Spectrum(frequencies=freqs, power=psd, degenerate=clamped)


def music_spectrum(series: EnvelopeSeries, subspace_dim: int = 2,
                   hankel_rows: int = None, n_freq: int = 2048,
                   min_cycles: float = 0.5) -> Spectrum:
    """Noise-subspace pseudospectrum of the mean-removed envelope.

    A Hankel matrix of the series feeds a forward-backward averaged sample
    covariance whose smallest eigenvectors span the noise subspace. The
    default Hankel height uses most of the series: short trajectories cover
    only one or two envelope cycles, and a taller Hankel matrix (longer
    subvectors) is what keeps the peak location unbiased there.
    """
    if subspace_dim <= 0:
        raise ValueError("subspace dimension must be positive")
    x = series.samples - series.samples.mean()
    n = x.size
    if hankel_rows is None:
        hankel_rows = (9 * n) // 10
    if hankel_rows <= subspace_dim:
        raise ValueError("hankel_rows must exceed subspace_dim")
    if hankel_rows >= n:
        raise ValueError("hankel_rows leaves no Hankel columns")
    h = scipy.linalg.hankel(x[:hankel_rows], x[hankel_rows - 1:])
    cov = h @ h.T / h.shape[1]
    flip = np.eye(hankel_rows)[::-1]
    cov = 0.5 * (cov + flip @ cov.T @ flip)
    eigvals, eigvecs = np.linalg.eigh(cov)
    if np.sum(eigvals > eigvals[-1] * 1e-12) < subspace_dim:
        raise ValueError("data rank below the requested signal subspace")
    noise = eigvecs[:, :hankel_rows - subspace_dim]
    freqs = _frequency_grid(series, n_freq, min_cycles)
    steer = np.exp(-2j * math.pi * freqs[:, None] * series.spacing
                   * np.arange(hankel_rows)[None, :])
    denom = np.sum(np.abs(steer.conj() @ noise) ** 2, axis=1)
    return Spectrum(frequencies=freqs, power=1.0 / np.maximum(denom, 1e-30))


def peak_frequency(spectrum: Spectrum) -> float:
    return float(spectrum.frequencies[int(np.argmax(spectrum.power))])


def peak_to_height(frequency: float, wavelength: float,
                   antenna_height: float) -> float:
    """Invert the envelope-frequency/height relation f = 2 h_a h / lambda."""
    if frequency < 0:
        raise ValueError("frequency must be nonnegative")
    if antenna_height <= 0:
        raise ValueError("antenna height must be positive")
    return frequency * wavelength / (2.0 * antenna_height)


def estimate_height(series: EnvelopeSeries, wavelength: float,
                    method: str = "music", **kwargs) -> float:
    """Round-trip: spectral peak of the envelope mapped to a height."""
    if method == "music":
        spec = music_spectrum(series, **kwargs)
    elif method == "burg":
        spec = burg_spectrum(series, **kwargs)
    else:
        raise ValueError(f"unknown baseline method {method!r}")
    return peak_to_height(peak_frequency(spec), wavelength,
                          series.antenna_height)
