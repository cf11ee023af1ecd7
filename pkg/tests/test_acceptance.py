"""Acceptance gate: one test per criterion, each at its stated tolerance.

The summary at the end of the run prints one PASS/FAIL line per criterion.
"""
from __future__ import annotations

import math
import time

import numpy as np
import pytest
from scipy import signal

from fvnkit.analysis import band_duration, centroid_identity_check, ks_distance_to_normal
from fvnkit.audio import AudioBuffer
from fvnkit.core import SIX_TERM, sidelobe_metrics
from fvnkit.excitation import (F0Trajectory, MorphSchedule, calibrate_pr_ratio, f0_with_vibrato,
                               frozen_ifvn, measure_pr_ratio, morph_unit, morphed_ifvn,
                               random_ifvn)
from fvnkit.ffvn import reference_sigmoid_profile, generate_ffvn_unit, reference_band_profile
from fvnkit.fvn import FvnParams, bandwidth_for_duration, design_phase, duration_samples, generate_unit
from fvnkit.hiding import HidingKey, apply_allpass, exceedance, recover, tsp_error

from signals import FS, sparse_burst_signal


def test_criterion_01_window_quality(record_property):
    start = time.perf_counter()
    m = sidelobe_metrics(SIX_TERM)
    elapsed = time.perf_counter() - start
    record_property("peak_db", round(m.peak_sidelobe_db, 2))
    record_property("decay_db_oct", round(m.decay_rate_db_per_octave, 2))
    assert m.peak_sidelobe_db <= -114.0
    assert abs(m.decay_rate_db_per_octave + 54.0) <= 3.0
    assert elapsed < 1.0


def test_criterion_02_coefficient_identities(record_property):
    record_property("sum", SIX_TERM.center_value())
    record_property("alt_sum", SIX_TERM.edge_value())
    assert abs(SIX_TERM.center_value() - 1.0) <= 1e-10
    assert abs(SIX_TERM.edge_value()) <= 1e-10


def test_criterion_03_allpass_and_tsp(record_property):
    rng = np.random.default_rng(3)
    worst_mag = worst_tsp = 0.0
    start = time.perf_counter()
    for b in (100.0, 200.0, 400.0, 2000.0):
        for seed in rng.integers(0, 2 ** 31, size=25):
            unit = generate_unit(FvnParams(b_hz=b, fd_hz=b / 5, seed=int(seed)))
            mag = np.abs(np.fft.fft(unit.impulse_response))
            worst_mag = max(worst_mag, float(np.max(np.abs(mag - 1.0))))
            worst_tsp = max(worst_tsp, tsp_error(unit.impulse_response))
    elapsed = time.perf_counter() - start
    record_property("max_mag_dev", f"{worst_mag:.2e}")
    record_property("max_tsp_err", f"{worst_tsp:.2e}")
    assert worst_mag < 1e-10
    assert worst_tsp < 1e-9
    assert elapsed < 30.0


def test_criterion_04_duration_law(record_property):
    products = {}
    for b in (100.0, 200.0, 400.0):
        sigma = duration_samples(FvnParams(b_hz=b, fd_hz=b / 3), range(1000))
        products[b] = b * float(np.median(sigma))
    for b, v in products.items():
        record_property(f"B{int(b)}", round(v, 4))
    assert all(0.47 <= v <= 0.58 for v in products.values()), products


def test_criterion_05_hiding_round_trip(record_property):
    rng = np.random.default_rng(5)
    x = AudioBuffer(rng.standard_normal(int(10 * FS)), FS)
    key = HidingKey.generate(FvnParams(seed=101))
    wrong = HidingKey.generate(FvnParams(seed=202))
    z = recover(apply_allpass(x, key), key)
    rel = float(np.max(np.abs(z.samples - x.samples)) / np.max(np.abs(x.samples)))
    record_property("round_trip_err", f"{rel:.2e}")
    assert rel < 1e-6

    right, bad = [], []
    for trial in range(50):
        src = sparse_burst_signal(1000 + trial)
        y = apply_allpass(src, key)
        right.append(exceedance(recover(y, key)))
        bad.append(exceedance(recover(y, wrong)))
    right, bad = np.array(right), np.array(bad)
    record_property("correct_key_mean_pct", round(100 * right.mean(), 3))
    record_property("wrong_key_max_pct", round(100 * bad.max(), 3))
    assert np.all(bad < 0.001)
    assert np.all(np.abs(right - 0.01) <= 0.005)


def test_criterion_06_centroid_identity(record_property):
    rng = np.random.default_rng(6)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        x = rng.standard_normal(256)
        lhs, rhs = centroid_identity_check(x, 8000.0)
        worst = max(worst, abs(lhs - rhs) / abs(lhs))
    record_property("max_rel_err", f"{worst:.2e}")
    assert worst <= 1e-6
    assert time.perf_counter() - start < 5.0


def test_criterion_07_ffvn_profiles(record_property):
    fs = 16000.0
    profile = reference_band_profile()
    b = bandwidth_for_duration(profile.max_duration)
    params = FvnParams(b_hz=b, fd_hz=b / 3, sample_rate=fs)
    bands = [(50.0, 1000.0), (1000.0, 2000.0), (2000.0, 4000.0), (4000.0, 6000.0),
             (6000.0, fs / 2 - 50.0)]
    per_band = np.array([[band_duration(u.impulse_response, fs, lo, hi) for lo, hi in bands]
                         for u in (generate_ffvn_unit(profile, params.with_seed(s))
                                   for s in range(200))])
    medians = np.median(per_band, axis=0)
    record_property("band_medians_ms", np.round(medians * 1e3, 3).tolist())
    targets = np.array(profile.durations)
    assert np.array_equal(np.argsort(medians), np.argsort(targets))

    sig = reference_sigmoid_profile()
    b = bandwidth_for_duration(sig.max_duration)
    sp = FvnParams(b_hz=b, fd_hz=b / 3, sample_rate=44100.0)
    pairs = np.array([(band_duration(u.impulse_response, 44100.0, 100.0, 1900.0),
                       band_duration(u.impulse_response, 44100.0, 2100.0, 20000.0))
                      for u in (generate_ffvn_unit(sig, sp.with_seed(s)) for s in range(200))])
    below, above = np.median(pairs, axis=0)
    record_property("sigmoid_below_over_above", round(below / above, 4))
    assert below / above < 1.0


def test_criterion_08_morph_calibration(record_property):
    params = FvnParams(b_hz=100.0, fd_hz=20.0, seed=8)
    f0 = F0Trajectory(100.0, 0.05)
    cal = calibrate_pr_ratio(params, f0, np.linspace(0.0, 1.0, 11), n_seeds=50)
    record_property("g_db", np.round(cal.g_db, 2).tolist())
    assert np.all(np.diff(cal.g_db) < 0)

    frozen = design_phase(params)
    rand = design_phase(params.with_seed(9))
    assert morph_unit(frozen, rand, 0.0).phase.tobytes() == frozen.phase.tobytes()
    assert morph_unit(frozen, rand, 1.0).phase.tobytes() == rand.phase.tobytes()
    f0_long = F0Trajectory(100.0, 0.1)
    at0 = morphed_ifvn(frozen, params, f0_long, MorphSchedule.constant(0.0))
    at1 = morphed_ifvn(frozen, params, f0_long, MorphSchedule.constant(1.0))
    assert at0.samples.tobytes() == frozen_ifvn(frozen, f0_long).samples.tobytes()
    assert at1.samples.tobytes() == random_ifvn(params, f0_long).samples.tobytes()

    r0 = cal.r_for_eta(0.0)
    eta = measure_pr_ratio(frozen, params, f0, r0, range(5000, 5100))
    record_property("r_at_0dB", round(r0, 4))
    record_property("measured_eta_db", round(eta, 3))
    assert abs(eta) <= 1.5


def test_criterion_09_statistical_character(record_property):
    fs = 44100.0
    params = FvnParams(b_hz=100.0, fd_hz=20.0, sample_rate=fs, fft_length=8192)
    acc = 0.0
    for s in range(200):
        x = random_ifvn(params.with_seed(s), F0Trajectory(100.0, 0.12, fs)).samples
        f, p = signal.welch(x[int(0.01 * fs):], fs, nperseg=1024)
        acc = acc + p
    band = (f >= 3 * params.b_hz) & (f <= fs / 2 - 3 * params.b_hz)
    level = 10 * np.log10(acc[band] / np.mean(acc[band]))
    record_property("flatness_db", [round(float(level.min()), 3), round(float(level.max()), 3)])

    p0 = params.with_seed(0)
    f0 = F0Trajectory(100.0, 2.5, fs)
    steady = slice(int(0.1 * fs), int(0.1 * fs) + 100_000)
    ks_random = ks_distance_to_normal(random_ifvn(p0, f0).samples[steady])
    ks_frozen = ks_distance_to_normal(frozen_ifvn(design_phase(p0), f0).samples[steady])
    record_property("ks_random", round(ks_random, 4))
    record_property("ks_frozen", round(ks_frozen, 4))
    assert np.max(np.abs(level)) <= 1.5
    assert ks_random < 0.02
    assert ks_frozen < 0.02


def test_criterion_10_vibrato_and_burst(record_property):
    traj = F0Trajectory(82.41, 1.0, 44100.0, f_vib=5.2, d_cent=10.0)
    expected = 82.41 * 2.0 ** (1.0 / 120.0)
    assert traj.peak_f0 == pytest.approx(expected, rel=1e-9)
    # the sampled trajectory reaches the peak within a fraction of a sample of t = 1 / (4 f_vib)
    assert float(f0_with_vibrato(traj).max()) == pytest.approx(expected, rel=1e-9)
    sigma = duration_samples(FvnParams(b_hz=2000.0, fd_hz=400.0, phi_max=math.pi / 2),
                             range(200))
    med = float(np.median(sigma))
    record_property("burst_median_ms", round(med * 1e3, 4))
    assert abs(med - 0.78e-3) <= 0.2 * 0.78e-3
