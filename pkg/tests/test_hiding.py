import dataclasses

import numpy as np
import pytest

from fvnkit.audio import AudioBuffer
from fvnkit.errors import AlignmentError, ContractError, ParameterError
from fvnkit.fvn import FvnParams, FvnUnit, duration_samples, generate_unit
from fvnkit.hiding import (HidingKey, KurtosisConfig, TamperReport, apply_allpass,
                           depuzz_params, detect_tamper, exceedance, recover, tsp_error)
from fvnkit.velvet import generate_ovn

from signals import FS, sparse_burst_signal


@pytest.fixture(scope="module")
def key():
    return HidingKey.generate(FvnParams(seed=11))


@pytest.fixture(scope="module")
def other_key():
    return HidingKey.generate(FvnParams(seed=12))


def test_impulse_input_returns_key_response(key):
    x = np.zeros(100)
    x[0] = 1.0
    y = apply_allpass(AudioBuffer(x, FS), key)
    assert len(y) == 100 + key.length - 1
    np.testing.assert_allclose(y.samples[:key.length], key.causal_response, atol=1e-12)
    assert key.latency == key.length // 2


def test_filter_keeps_power_spectrum(key, rng):
    x = rng.standard_normal(4096)
    y = apply_allpass(AudioBuffer(x, FS), key).samples
    n = len(y)
    # linear convolution multiplies spectra exactly on a long enough grid
    ratio = np.abs(np.fft.rfft(y, n)) / np.abs(np.fft.rfft(x, n))
    np.testing.assert_allclose(ratio, 1.0, atol=1e-9)
    assert np.sum(y ** 2) == pytest.approx(np.sum(x ** 2), rel=1e-9)


@pytest.mark.parametrize("n", [1, 50, 4096, 44100])
def test_round_trip_recovers_input(key, rng, n):
    x = AudioBuffer(rng.standard_normal(n), FS)
    z = recover(apply_allpass(x, key), key)
    assert len(z) == n
    np.testing.assert_allclose(z.samples, x.samples, atol=1e-10)


def test_wrong_key_does_not_recover(key, other_key, rng):
    x = AudioBuffer(rng.standard_normal(20000), FS)
    z = recover(apply_allpass(x, key), other_key).samples
    assert np.linalg.norm(z - x.samples) / np.linalg.norm(x.samples) > 0.5


@pytest.mark.parametrize("b_hz", [50.0, 100.0])
def test_key_specificity_for_long_keys(b_hz, rng):
    # B at or below 100 Hz gives durations of 5 ms and more
    a = HidingKey.generate(FvnParams(b_hz=b_hz, fd_hz=b_hz / 5, seed=1))
    b = HidingKey.generate(FvnParams(b_hz=b_hz, fd_hz=b_hz / 5, seed=2))
    assert float(np.median(duration_samples(FvnParams(b_hz=b_hz, fd_hz=b_hz / 5),
                                            range(20)))) >= 5e-3
    x = AudioBuffer(rng.standard_normal(30000), FS)
    z = recover(apply_allpass(x, a), b).samples
    assert np.linalg.norm(z - x.samples) / np.linalg.norm(x.samples) > 0.5


def test_recover_rejects_short_signal(key):
    with pytest.raises(AlignmentError):
        recover(AudioBuffer(np.zeros(key.length - 1), FS), key)


def test_filter_rejects_empty_and_rate_mismatch(key):
    with pytest.raises(ParameterError):
        apply_allpass(AudioBuffer(np.zeros(0), FS), key)
    with pytest.raises(ParameterError):
        apply_allpass(AudioBuffer(np.zeros(10), 48000.0), key)


def test_key_needs_seed():
    with pytest.raises(ParameterError):
        HidingKey.generate(FvnParams())


def test_key_rejects_non_tsp_response(key):
    u = key.unit
    h = u.impulse_response.copy()
    h[3] += 1e-6
    broken = dataclasses.replace(u, impulse_response=h)
    assert tsp_error(h) > 1e-9
    with pytest.raises(ContractError):
        HidingKey(broken)


def test_tsp_error_of_delta_is_zero():
    d = np.zeros(16)
    d[0] = 1.0
    assert tsp_error(d) == 0.0


def test_depuzz_key_duration():
    sigma = duration_samples(depuzz_params(0), range(100))
    assert 0.7e-3 < float(np.median(sigma)) < 1.2e-3


def test_depuzz_key_removes_velvet_spikes():
    ovn = generate_ovn(int(2 * FS), 200.0, seed=4)
    x = AudioBuffer(ovn.samples, FS)
    assert exceedance(x) > 0.5
    key = HidingKey.generate(depuzz_params(5))
    y = apply_allpass(x, key)
    assert exceedance(y) < 0.001


def test_gaussian_noise_is_suspect(key, rng):
    x = AudioBuffer(rng.standard_normal(int(3 * FS)), FS)
    report = detect_tamper(apply_allpass(x, key), key)
    assert report.verdict == "suspect"
    assert report.exceedance_fraction < 0.005


def test_verdicts_for_right_and_wrong_key(key, other_key):
    y = apply_allpass(sparse_burst_signal(77), key)
    assert detect_tamper(y, key).verdict == "intact"
    assert detect_tamper(y, other_key).verdict == "suspect"


def test_decision_level_is_configurable(key):
    y = apply_allpass(sparse_burst_signal(78), key)
    strict = KurtosisConfig(decision_level=0.5)
    assert detect_tamper(y, key, strict).verdict == "suspect"


@pytest.mark.parametrize("frac,verdict", [(0.0, "suspect"), (0.0125, "intact")])
def test_record_format(frac, verdict):
    line = TamperReport(frac, verdict).to_record()
    assert line == f"verdict={verdict} exceedance={frac!r}"
    fields = dict(item.split("=") for item in line.split())
    assert float(fields["exceedance"]) == frac


def test_unit_property_passes_through(key):
    assert isinstance(key.unit, FvnUnit)
    np.testing.assert_array_equal(key.causal_response, key.unit.centered())
    np.testing.assert_array_equal(generate_unit(FvnParams(seed=11)).impulse_response,
                                  key.unit.impulse_response)
