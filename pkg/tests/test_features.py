import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import signal

from oracles import biquad_impulse_response, mp_butterworth2
from ssbsl.errors import ConfigError
from ssbsl.features import (
    FilterCoeffs,
    RawRecording,
    butterworth2_lowpass,
    extract_features,
    filter_forward,
    rectify,
    trim_transient,
)


def rec(samples, fs=2000.0, label=None):
    return RawRecording(fs, np.asarray(samples, dtype=float).reshape(len(samples), -1), label)


def df2t(b, a, x):
    """Plain-Python transposed direct form II, zero initial state."""
    s1 = s2 = 0.0
    out = []
    for v in x:
        y = b[0] * v + s1
        s1 = b[1] * v - a[1] * y + s2
        s2 = b[2] * v - a[2] * y
        out.append(y)
    return np.array(out)


# -- rectify -----------------------------------------------------------------

def test_rectify_values():
    r = rectify(rec([-0.5, 0.25, 0.0], label=3))
    np.testing.assert_array_equal(r.samples[:, 0], [0.5, 0.25, 0.0])
    assert r.motion_label == 3 and r.sample_rate_hz == 2000.0


def test_rectify_identity_and_idempotence():
    x = rec(np.random.default_rng(0).normal(size=(50, 3)))
    pos = rec(np.abs(x.samples))
    np.testing.assert_array_equal(rectify(pos).samples, pos.samples)
    np.testing.assert_array_equal(rectify(rectify(x)).samples, rectify(x).samples)


# -- filter design -------------------------------------------------------------

def test_dc_gain_is_one():
    for fc, fs in [(1, 2000), (10, 1000), (100, 250), (0.1, 50)]:
        assert butterworth2_lowpass(fc, fs).dc_gain() == pytest.approx(1.0, abs=1e-9)


def test_minus_three_db_at_cutoff():
    coeffs = butterworth2_lowpass(1.0, 2000.0)
    gain_db = 20 * np.log10(abs(coeffs.frequency_response(1.0, 2000.0)))
    assert gain_db == pytest.approx(-3.0103, abs=0.05)


def test_coefficients_match_extended_precision_bilinear_transform():
    ref = mp_butterworth2(1, 2000)
    got = butterworth2_lowpass(1.0, 2000.0)
    for name, value in ref.items():
        assert getattr(got, name) == pytest.approx(float(value), rel=1e-12), name


def test_matches_scipy_butter():
    b, a = signal.butter(2, 1.0, fs=2000.0)
    got = butterworth2_lowpass(1.0, 2000.0)
    np.testing.assert_allclose(got.b, b, rtol=1e-9)
    np.testing.assert_allclose(got.a, a, rtol=1e-9)


@pytest.mark.parametrize("fc", [1000.0, 1500.0, 0.0, -1.0])
def test_cutoff_out_of_range(fc):
    with pytest.raises(ConfigError):
        butterworth2_lowpass(fc, 2000.0)


def test_unstable_coefficients_rejected():
    with pytest.raises(ConfigError):
        FilterCoeffs(1.0, 0.0, 0.0, -2.0, 1.0)


# -- filtering -----------------------------------------------------------------

def test_constant_input_converges():
    coeffs = butterworth2_lowpass(1.0, 2000.0)
    y = filter_forward(coeffs, np.full(5 * 2000 + 1, 2.5))
    assert abs(y[-1] - 2.5) < 1e-6


def test_zero_in_zero_out():
    y = filter_forward(butterworth2_lowpass(1.0, 2000.0), np.zeros(100))
    assert np.all(y == 0)


def test_impulse_response_matches_partial_fractions():
    coeffs = butterworth2_lowpass(1.0, 2000.0)
    n = 20_000
    impulse = np.zeros(n)
    impulse[0] = 1.0
    h = filter_forward(coeffs, impulse)
    ref = biquad_impulse_response(coeffs.b, coeffs.a, n)
    np.testing.assert_allclose(h, ref, atol=1e-12)
    assert h.sum() == pytest.approx(1.0, abs=1e-6)


def test_matches_hand_rolled_df2t():
    coeffs = butterworth2_lowpass(5.0, 200.0)
    x = np.random.default_rng(1).normal(size=400)
    np.testing.assert_allclose(filter_forward(coeffs, x), df2t(coeffs.b, coeffs.a, x), rtol=1e-12, atol=1e-15)


def test_output_length_and_multichannel():
    coeffs = butterworth2_lowpass(1.0, 100.0)
    x = np.random.default_rng(2).normal(size=(37, 4))
    y = filter_forward(coeffs, x)
    assert y.shape == x.shape
    np.testing.assert_allclose(y[:, 2], filter_forward(coeffs, x[:, 2]))


@settings(max_examples=40, deadline=None)
@given(ratio=st.floats(1e-4, 0.49))
def test_every_design_is_stable(ratio):
    fs = 1000.0
    coeffs = butterworth2_lowpass(ratio * fs, fs)
    assert np.all(np.abs(coeffs.poles()) < 1)
    # |h[k]| <= 2 * max|residue| * |p|^k, so decay below 1e-12 in bounded time
    radius = np.abs(coeffs.poles()).max()
    k = int(np.ceil(np.log(1e-14) / np.log(radius))) + 10
    h = biquad_impulse_response(coeffs.b, coeffs.a, k + 1)
    assert abs(h[-1]) < 1e-12


# -- trimming ------------------------------------------------------------------

def test_trim_fourteen_thousand_samples():
    r = rec(np.zeros((14_000, 4)))
    assert len(trim_transient(r, 0.10)) == 12_600


def test_trim_zero_and_floor():
    r = rec(np.arange(10.0))
    assert len(trim_transient(r, 0.0)) == 10
    out = trim_transient(r, 0.15)
    assert len(out) == 9 and out.samples[0, 0] == 1.0


@pytest.mark.parametrize("f", [-0.1, 1.0, 1.5])
def test_trim_range(f):
    with pytest.raises(ConfigError):
        trim_transient(rec(np.zeros(10)), f)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 500), f=st.floats(0, 1, exclude_max=True))
def test_trim_length_property(n, f):
    assert len(trim_transient(rec(np.zeros(n)), f)) == n - math.floor(f * n)


# -- pipeline --------------------------------------------------------------------

def test_four_channels_in_four_features_out():
    x = np.random.default_rng(3).normal(size=(1000, 4))
    out = extract_features(rec(x, label=2))
    assert out.dim == 4
    assert np.all(out.labels == 2) and len(out) == 900


def test_zero_signal_gives_zero_features():
    out = extract_features(rec(np.zeros((200, 4))))
    assert np.all(out.features == 0) and out.labels is None


def test_pipeline_matches_scripted_composition():
    fs = 500.0
    t = np.arange(2500) / fs
    x = np.column_stack([np.sin(2 * np.pi * 7 * t), 0.5 * np.sin(2 * np.pi * 13 * t + 1)])
    out = extract_features(rec(x, fs=fs, label=1), cutoff_hz=1.0, trim=0.1)

    ref_coeffs = mp_butterworth2(1.0, fs)
    b = [float(ref_coeffs[n]) for n in ("b0", "b1", "b2")]
    a = [1.0, float(ref_coeffs["a1"]), float(ref_coeffs["a2"])]
    expected = np.column_stack([df2t(b, a, np.abs(col)) for col in x.T])[250:]
    np.testing.assert_allclose(out.features, expected, rtol=1e-9, atol=1e-12)
    # rectified sine has mean 2/pi * amplitude; the envelope settles near it
    assert out.features[-1, 0] == pytest.approx(2 / np.pi, rel=0.05)


def test_recording_from_files(tmp_path):
    csv_path = tmp_path / "r.csv"
    csv_path.write_text("ch1,ch2\n0.1,-0.2\n0.3,0.4\n-0.5,0.0\n")
    meta = tmp_path / "r.json"
    meta.write_text(json.dumps({"sample_rate_hz": 2000, "trial_id": 4, "motion_label": 5}))
    r = RawRecording.from_files(csv_path, meta)
    assert r.num_channels == 2 and len(r) == 3 and r.motion_label == 5 and r.trial_id == 4


@pytest.mark.parametrize("text", ["a,b\n1,2\n3,4\n", "ch1,ch2\n1,2\n3\n", "ch1\n1\nx\n", ""])
def test_malformed_recording_csv(tmp_path, text):
    csv_path = tmp_path / "r.csv"
    csv_path.write_text(text)
    meta = tmp_path / "r.json"
    meta.write_text(json.dumps({"sample_rate_hz": 2000}))
    with pytest.raises(ConfigError):
        RawRecording.from_files(csv_path, meta)
