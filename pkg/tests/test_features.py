import math

import numpy as np
import pytest
from conftest import SR, tone
from hypothesis import given
from hypothesis import strategies as st

from lded_acoustic.features import (
    FEATURE_NAMES,
    RATIO_CAP,
    SPECTRAL_FEATURES,
    STAT_NAMES,
    aggregate_segment,
    amplitude_envelope,
    frame_features,
    rms_energy,
    segment_feature_vector,
    spectral_descriptors,
    zero_crossing_rate,
)
from lded_acoustic.signal_core import AudioClip, segment_clip

FRAME = 512
N_BINS = FRAME // 2 + 1
SPLIT = math.ceil(7000 * FRAME / SR)


# ---- brute-force transcriptions, one frame at a time, plain loops ----------


def bf_time(frame):
    ae = max(abs(v) for v in frame)
    rms = math.sqrt(sum(v * v for v in frame) / len(frame))
    sgn = [(v > 0) - (v < 0) for v in frame]
    zcr = 0.5 * sum(abs(sgn[k] - sgn[k + 1]) for k in range(len(frame) - 1))
    return {"AE": ae, "RMS": rms, "ZCR": zcr}


def bf_spectral(m, prev=None):
    N = len(m)
    total = sum(m)
    sc = sum(n * m[n] for n in range(N)) / total
    sbw = sum(abs(n - sc) * m[n] for n in range(N)) / total
    acc, sr = 0.0, None
    for i in range(N):
        acc += m[i]
        if acc >= 0.85 * total:
            sr = i
            break
    geo = math.exp(sum(math.log(v) for v in m) / N)
    sf = geo / (total / N)
    ber = sum(m[n] ** 2 for n in range(SPLIT)) / sum(m[n] ** 2 for n in range(SPLIT, N))
    q = int(0.2 * N)
    pw = sorted(v * v for v in m)
    contrast = (sum(pw[-q:]) / q) / (sum(pw[:q]) / q)
    mu2 = math.sqrt(sum((n - sc) ** 2 * m[n] for n in range(N)) / total)
    mu3 = sum((n - sc) ** 3 * m[n] for n in range(N)) / (mu2**3 * total)
    mu4 = sum((n - sc) ** 4 * m[n] for n in range(N)) / (mu2**4 * total)
    crest = max(m) / (total / N)
    h = -sum((v / total) * math.log(v / total) for v in m) / math.log(N)
    flux = 0.0 if prev is None else math.sqrt(sum((m[n] - prev[n]) ** 2 for n in range(N)))
    return {
        "S-centroid": sc,
        "S-bandwidth": sbw,
        "S-rolloff": sr,
        "S-flatness": sf,
        "BER": ber,
        "S-contrast": contrast,
        "S-variance": mu2,
        "S-skewness": mu3,
        "S-kurtosis": mu4,
        "S-crest": crest,
        "S-entropy": h,
        "S-flux": flux,
    }


def random_spectra(rng, count):
    kinds = [
        lambda: rng.random(N_BINS),
        lambda: rng.exponential(size=N_BINS) ** 3,
        lambda: np.abs(rng.standard_normal(N_BINS)) * np.exp(-np.arange(N_BINS) / rng.uniform(5, 200)),
    ]
    cols = [kinds[i % 3]() + 1e-6 for i in range(count)]
    return np.column_stack(cols)


def test_time_features_match_brute_force():
    rng = np.random.default_rng(11)
    frames = rng.standard_normal((1000, FRAME)) * rng.uniform(0.01, 10, size=(1000, 1))
    frames[::7, ::3] = 0.0  # exact zeros exercise the sign convention
    got = {"AE": amplitude_envelope(frames), "RMS": rms_energy(frames), "ZCR": zero_crossing_rate(frames)}
    for i in range(1000):
        want = bf_time(frames[i].tolist())
        for name, value in want.items():
            assert got[name][i] == pytest.approx(value, rel=1e-9, abs=0), (name, i)


def test_spectral_features_match_brute_force():
    m = random_spectra(np.random.default_rng(12), 1000)
    got = spectral_descriptors(m, SR, FRAME)
    assert set(got) == set(SPECTRAL_FEATURES)
    for t in range(m.shape[1]):
        col = m[:, t].tolist()
        want = bf_spectral(col, None if t == 0 else m[:, t - 1].tolist())
        for name, value in want.items():
            assert got[name][t] == pytest.approx(value, rel=1e-9, abs=1e-12), (name, t)


def test_all_fifteen_series_present():
    series = frame_features(AudioClip(np.random.default_rng(0).standard_normal(22050), SR))
    assert tuple(series) == FEATURE_NAMES and len(FEATURE_NAMES) == 15
    assert all(len(s) == 85 for s in series.values())
    assert len(STAT_NAMES) == 30


# ---- degenerate spectra ----------------------------------------------------


def one(m):
    return {k: v[0] for k, v in spectral_descriptors(np.asarray(m, float)[:, None], SR, FRAME).items()}


def test_single_bin_spectrum():
    m = np.zeros(N_BINS)
    m[40] = 3.0
    d = one(m)
    assert d["S-centroid"] == 40 and d["S-bandwidth"] == 0
    assert d["S-flatness"] < 1e-9
    assert d["S-crest"] == pytest.approx(N_BINS)
    assert d["S-entropy"] == 0
    assert d["S-skewness"] == 0 and d["S-kurtosis"] == 0


def test_flat_spectrum():
    d = one(np.full(N_BINS, 0.3))
    assert d["S-flatness"] == pytest.approx(1.0)
    assert d["S-crest"] == pytest.approx(1.0)
    assert d["S-entropy"] == pytest.approx(1.0)
    assert d["S-centroid"] == pytest.approx((N_BINS - 1) / 2)


def test_ber_split_cases():
    low = np.zeros(N_BINS)
    low[:SPLIT] = 1.0
    high = np.zeros(N_BINS)
    high[SPLIT:] = 1.0
    assert one(low)["BER"] == RATIO_CAP
    assert one(high)["BER"] == 0.0


def test_silence_and_impulse_are_finite():
    for x in (np.zeros(2048), np.eye(1, 2048, 700)[0]):
        series = frame_features(AudioClip(x, SR))
        for s in series.values():
            assert np.all(np.isfinite(s.values))


# ---- time-domain examples --------------------------------------------------


def test_time_feature_examples():
    assert amplitude_envelope(np.full((1, 16), 0.5))[0] == 0.5
    assert amplitude_envelope(np.eye(1, 16))[0] == 1.0
    assert rms_energy(np.full((1, 16), -0.25))[0] == 0.25
    assert rms_energy(np.zeros((1, 16)))[0] == 0.0
    assert zero_crossing_rate(np.ones((1, 16)))[0] == 0
    assert zero_crossing_rate(np.tile([1.0, -1.0], 8)[None])[0] == 15


def test_dense_sine_peak_and_rms():
    x = tone(441.0, 1.0, amp=0.8)
    assert abs(amplitude_envelope(x[None])[0] - 0.8) < 0.8 * (1 - math.cos(2 * math.pi * 441 / SR))
    assert abs(rms_energy(x[None])[0] - 0.8 / math.sqrt(2)) < 1e-3


@pytest.mark.parametrize("f", [50.0, 440.0, 3000.0])
def test_sine_zero_crossings(f):
    assert abs(zero_crossing_rate(tone(f, 1.0, phase=0.3)[None])[0] - 2 * f) <= 2


# ---- aggregation -----------------------------------------------------------


def test_aggregate_examples():
    v = aggregate_segment({"a": np.full(2, 2.5), "b": np.array([0.0, 2.0])})
    assert v["a mean"] == 2.5 and v["a var"] == 0
    assert v["b mean"] == 1 and v["b var"] == 1
    with pytest.raises(ValueError):
        aggregate_segment({"a": np.ones(3), "b": np.ones(4)})


def test_aggregate_matches_two_pass():
    rng = np.random.default_rng(3)
    s = rng.standard_normal(85) * 7 + 100
    v = aggregate_segment({"x": s})
    mean = math.fsum(s) / 85
    var = math.fsum((x - mean) ** 2 for x in s) / 85
    assert v["x mean"] == pytest.approx(mean, rel=1e-12)
    assert v["x var"] == pytest.approx(var, rel=1e-12)


def test_segment_vector_layout():
    clip = AudioClip(np.random.default_rng(1).standard_normal(44100), SR)
    seg = segment_clip(clip)[1]
    vec = segment_feature_vector(seg)
    assert vec.segment_index == 1 and vec.start == 0.5
    assert vec.as_array().shape == (30,)


# ---- gain properties on 100 random signals ---------------------------------

INVARIANT = (
    "ZCR", "S-centroid", "S-bandwidth", "S-rolloff", "S-flatness", "BER", "S-contrast",
    "S-variance", "S-skewness", "S-kurtosis", "S-crest", "S-entropy",
)
EQUIVARIANT = ("AE", "RMS", "S-flux")


def test_gain_properties_on_100_signals():
    rng = np.random.default_rng(99)
    for _ in range(100):
        x = rng.standard_normal(4096) * np.exp(rng.uniform(-3, 3, size=4096).cumsum() / 400)
        g = float(np.exp(rng.uniform(-4, 4)))
        a = frame_features(AudioClip(x, SR))
        b = frame_features(AudioClip(g * x, SR))
        for name in INVARIANT:
            np.testing.assert_allclose(b[name].values, a[name].values, rtol=1e-7, atol=1e-9, err_msg=name)
        for name in EQUIVARIANT:
            np.testing.assert_allclose(b[name].values, g * a[name].values, rtol=1e-9, atol=0, err_msg=name)


@given(seed=st.integers(0, 2**31 - 1), shift=st.integers(1, 200))
def test_centroid_shifts_with_spectrum(seed, shift):
    m = np.zeros(N_BINS)
    m[:40] = np.random.default_rng(seed).random(40) + 0.1
    shifted = np.roll(m, shift)
    a, b = one(m), one(shifted)
    assert b["S-centroid"] == pytest.approx(a["S-centroid"] + shift, rel=1e-12)
    for name in ("S-bandwidth", "S-variance", "S-skewness", "S-kurtosis", "S-entropy", "S-crest"):
        assert b[name] == pytest.approx(a[name], rel=1e-9, abs=1e-12)
