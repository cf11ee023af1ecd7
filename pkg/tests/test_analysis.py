from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.signal.windows import hann

from fvnkit.analysis import (average_spectrograms, band_duration, centroid_identity_check,
                             columns_csv, duration, erl, group_delay, ks_distance_to_normal,
                             level_distribution, power_table_csv, running_kurtosis,
                             spectral_group_delay, spectrogram)
from fvnkit.audio import AudioBuffer
from fvnkit.errors import DegenerateError, ParameterError
from fvnkit.fvn import PhaseSpec


@pytest.mark.parametrize("gap", [1, 10, 101])
def test_duration_two_impulses(gap):
    x = np.zeros(200)
    x[5] = x[5 + gap] = 1.0
    assert duration(x, 1000.0) == pytest.approx(gap / 2 / 1000.0)


def test_duration_explicit_origin():
    x = np.zeros(11)
    x[10] = 1.0
    assert duration(x, 1.0, origin=0.0) == pytest.approx(10.0)
    assert duration(x, 1.0) == 0.0


def test_duration_of_audio_buffer():
    assert duration(AudioBuffer(np.array([1.0, 0.0, 1.0]), 2.0)) == pytest.approx(0.5)


def test_duration_errors():
    with pytest.raises(DegenerateError):
        duration(np.zeros(4), 1.0)
    with pytest.raises(ParameterError):
        duration(np.ones(4))


def test_erl():
    assert erl(np.sqrt(1 / 12)) == pytest.approx(1.0)
    # a 0.78 ms duration is a 2.7 ms effective rectangle
    assert erl(0.78e-3) == pytest.approx(2.7e-3, abs=0.01e-3)
    with pytest.raises(ParameterError):
        erl(-1.0)


def test_group_delay_of_linear_phase():
    K, fs, d = 256, 1000.0, 0.013
    k = np.arange(K)
    phase = -2 * np.pi * np.where(k <= K // 2, k, k - K) * fs / K * d
    gd = group_delay(PhaseSpec(phase, fs))
    np.testing.assert_allclose(gd.tau_g, d, rtol=1e-10)
    assert gd.frequencies[0] == pytest.approx(fs / K)


def test_spectral_group_delay_of_shifted_impulse():
    x = np.zeros(64)
    x[7] = 1.0
    _, tau, _ = spectral_group_delay(x, 8.0)
    np.testing.assert_allclose(tau, 7 / 8.0, atol=1e-12)


def test_spectral_group_delay_matches_numeric_derivative(rng):
    x = rng.standard_normal(40)
    n = np.arange(x.size)
    freqs, tau, _ = spectral_group_delay(x, 1.0)
    eps = 1e-6
    for f in freqs[1:-1]:
        w = 2 * np.pi * f
        hi = np.angle(np.sum(x * np.exp(-1j * (w + eps) * n)))
        lo = np.angle(np.sum(x * np.exp(-1j * (w - eps) * n)))
        numeric = -np.angle(np.exp(1j * (hi - lo))) / (2 * eps)
        assert tau[freqs == f][0] == pytest.approx(numeric, abs=1e-5)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 300), st.integers(0, 10 ** 6), st.floats(-1.0, 1.0))
def test_centroid_identity_property(n, seed, t0):
    x = np.random.default_rng(seed).standard_normal(n)
    lhs, rhs = centroid_identity_check(x, 100.0, t0)
    assert rhs == pytest.approx(lhs, rel=1e-9, abs=1e-12)


def test_centroid_zero_signal():
    with pytest.raises(DegenerateError):
        centroid_identity_check(np.zeros(8), 1.0)


def brute_kurtosis(x, n, hop):
    w = hann(n, sym=True)
    out = []
    for start in range(0, x.size - n + 1, hop):
        f = x[start:start + n]
        mu2 = np.sum(w ** 2 * f ** 2) / np.sum(w ** 2)
        mu4 = np.sum(w ** 4 * f ** 4) / np.sum(w ** 4)
        out.append(mu4 / mu2 ** 2)
    return np.array(out)


def test_kurtosis_matches_brute_force(rng):
    x = rng.standard_normal(3000) * np.linspace(0.5, 2.0, 3000)
    tr = running_kurtosis(x, 1000.0, window_s=0.1, hop_s=0.03)
    np.testing.assert_allclose(tr.kappa, brute_kurtosis(x, 100, 30), rtol=1e-12)
    np.testing.assert_allclose(tr.times[0], 49.5 / 1000.0)


def test_gaussian_kurtosis_near_three(rng):
    tr = running_kurtosis(rng.standard_normal(200_000), 44100.0)
    assert np.nanmean(tr.kappa) == pytest.approx(3.0, rel=0.1)
    assert tr.exceedance_fraction() == 0.0


def test_sparse_signal_exceeds():
    x = np.zeros(44100)
    x[::500] = 1.0
    x += 1e-3 * np.random.default_rng(0).standard_normal(x.size)
    assert running_kurtosis(x, 44100.0).exceedance_fraction() > 0.9


@pytest.mark.parametrize("x", [np.zeros(5000), np.full(5000, 0.3)])
def test_kurtosis_undefined_frames(x):
    tr = running_kurtosis(x, 44100.0)
    assert not tr.defined.any()
    assert tr.exceedance_fraction() == 0.0


def test_kurtosis_errors():
    with pytest.raises(ParameterError):
        running_kurtosis(np.ones(10), 44100.0)
    with pytest.raises(ParameterError):
        running_kurtosis(np.ones(10000), 100.0, window_s=0.01)


@pytest.mark.parametrize("window", ["nuttall", "hann", "boxcar"])
def test_spectrogram_frames_hold_windowed_energy(rng, window):
    x = rng.standard_normal(4000)
    s = spectrogram(x, 8000.0, window_s=0.02, hop_s=0.005, window=window)
    n = 160
    from fvnkit.analysis import _window
    w = _window(window, n)
    energy = [np.sum((x[i * 40:i * 40 + n] * w) ** 2) for i in range(s.times.size)]
    np.testing.assert_allclose(s.power.sum(axis=0), energy, rtol=1e-10)


def test_spectrogram_tone_peak():
    fs = 8000.0
    t = np.arange(8000) / fs
    s = spectrogram(np.sin(2 * np.pi * 1000 * t), fs)
    peak = s.frequencies[np.argmax(s.power.mean(axis=1))]
    assert peak == pytest.approx(1000.0, abs=fs / 160)


def test_spectrogram_padding_centres_first_frame():
    s = spectrogram(np.ones(1000), 1000.0, window_s=0.1, hop_s=0.01, pad=True)
    assert s.times[0] == pytest.approx(-0.0005)
    with pytest.raises(ParameterError):
        spectrogram(np.ones(10), 1000.0, window_s=0.1, hop_s=0.01)
    with pytest.raises(ParameterError):
        spectrogram(np.ones(1000), 1000.0, window_s=0.01, hop_s=0.02)


def test_average_spectrograms(rng):
    a = spectrogram(rng.standard_normal(2000), 8000.0, hop_s=0.005)
    b = spectrogram(rng.standard_normal(2000), 8000.0, hop_s=0.005)
    np.testing.assert_allclose(average_spectrograms([a, b]).power, (a.power + b.power) / 2)
    with pytest.raises(ParameterError):
        average_spectrograms([])


def test_csv_formats():
    text = power_table_csv(np.array([0.5]), np.array([0.0, 10.0]), np.array([[1.0], [2.5]]))
    assert text == "time_s,freq_hz,value\n0.5,0.0,1.0\n0.5,10.0,2.5\n"
    assert columns_csv({"a": [1, 2], "b": [0.25, 3]}) == "a,b\n1.0,0.25\n2.0,3.0\n"


def test_level_distribution(rng):
    ld = level_distribution(3 + 2 * rng.standard_normal(1000))
    assert ld.levels.mean() == pytest.approx(0.0, abs=1e-12)
    assert ld.levels.std() == pytest.approx(1.0)
    assert np.all(np.diff(ld.levels) >= 0) and ld.cdf[-1] == 1.0
    with pytest.raises(DegenerateError):
        level_distribution(np.ones(5))
    with pytest.raises(ParameterError):
        level_distribution(np.array([]))


def test_ks_distance(rng):
    assert ks_distance_to_normal(rng.standard_normal(100_000)) < 0.01
    assert ks_distance_to_normal(rng.uniform(-1, 1, 100_000)) > 0.04


def test_band_duration_of_delta():
    h = np.zeros(4096)
    h[0] = 1.0
    assert band_duration(h, 16000.0, 1000.0, 2000.0) == pytest.approx(0.0, abs=1e-6)
    spread = band_duration(h, 16000.0, 1000.0, 2000.0, remove_filter_spread=False)
    assert spread == pytest.approx(0.58 / 1000.0, rel=0.05)
    with pytest.raises(ParameterError):
        band_duration(h, 16000.0, 2000.0, 1000.0)
