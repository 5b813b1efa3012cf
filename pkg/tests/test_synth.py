import hashlib
import json

import numpy as np
import pytest
from conftest import SR

from lded_acoustic.features import frame_features, segment_feature_vector
from lded_acoustic.signal_core import AudioClip, load_wav, segment_clip
from lded_acoustic.synth import (
    Band,
    BurstSpec,
    CorpusConfig,
    DatasetManifest,
    Layer,
    NoiseModel,
    ProcessScript,
    RegimeModel,
    SynthError,
    default_corpus_config,
    generate_corpus,
    mix,
    power,
    read_positions,
    synth_noise,
    synth_regime,
)


def band_fraction(x, cutoff, sr=SR):
    spec = np.abs(np.fft.rfft(x)) ** 2
    f = np.fft.rfftfreq(x.shape[0], 1 / sr)
    return spec[f < cutoff].sum() / spec.sum()


def test_regime_determinism():
    m = RegimeModel.crack()
    a = synth_regime(m, 0.5, SR, 3).samples
    assert np.array_equal(a, synth_regime(m, 0.5, SR, 3).samples)
    assert not np.array_equal(a, synth_regime(m, 0.5, SR, 4).samples)


def test_keyhole_is_low_frequency_heavy():
    frac = {
        label: np.mean([band_fraction(synth_regime(m, 0.25, SR, s).samples, 5000) for s in range(100)])
        for label, m in ((0, RegimeModel.defect_free()), (2, RegimeModel.keyhole()))
    }
    assert frac[2] >= 2 * frac[0]


def test_crack_envelope_is_more_variable():
    def ae_var(m, s):
        return frame_features(synth_regime(m, 0.5, SR, s))["AE"].values.var()

    crack = np.mean([ae_var(RegimeModel.crack(), s) for s in range(100)])
    clean = np.mean([ae_var(RegimeModel.defect_free(), s) for s in range(100)])
    assert crack > clean


def test_regime_validation():
    with pytest.raises(SynthError):
        RegimeModel(0, ())
    with pytest.raises(SynthError):
        Band(100, 50, 1.0)
    with pytest.raises(SynthError):
        Band(0, 50, -1.0)
    with pytest.raises(SynthError):
        BurstSpec(rate=-1)


def test_noise_mostly_below_1khz():
    fracs = [band_fraction(synth_noise(NoiseModel(), 5.0, SR, s).samples, 1000) for s in range(10)]
    assert np.mean(fracs) >= 0.6


def test_noise_determinism_and_silence():
    a = synth_noise(NoiseModel(), 0.5, SR, 9).samples
    assert np.array_equal(a, synth_noise(NoiseModel(), 0.5, SR, 9).samples)
    silent = NoiseModel(hum_weight=0, rumble_weight=0, knock_weight=0, whine_weight=0, broadband_weight=0)
    assert np.all(synth_noise(silent, 0.5, SR, 9).samples == 0)


def test_mix_snr():
    rng = np.random.default_rng(0)
    s = AudioClip(rng.standard_normal(SR), SR)
    n = AudioClip(3 * rng.standard_normal(SR) + 1, SR)
    zero = mix(s, n, 0.0)
    assert power(zero.samples - s.samples) == pytest.approx(power(s), rel=1e-9)
    for snr in (-5.0, 5.0, 17.3):
        out = mix(s, n, snr)
        measured = 10 * np.log10(power(s) / power(out.samples - s.samples))
        assert abs(measured - snr) < 0.01
    assert np.array_equal(mix(s, n, float("inf")).samples, s.samples)
    with pytest.raises(SynthError):
        mix(s, AudioClip(np.zeros(SR), SR), 5.0)
    with pytest.raises(SynthError):
        mix(s, AudioClip(np.ones(10), SR), 5.0)


def test_regimes_separable_at_10db():
    """Each regime pair differs in BER mean and centroid mean by a standardised effect above one."""
    noise = NoiseModel()
    stats = {}
    for label, model in RegimeModel.defaults().items():
        rows = []
        for s in range(30):
            clip = mix(synth_regime(model, 0.5, SR, s), synth_noise(noise, 0.5, SR, 1000 + s), 10.0)
            v = segment_feature_vector(segment_clip(clip)[0])
            rows.append([v["BER mean"], v["S-centroid mean"]])
        stats[label] = np.array(rows)
    for a, b in ((0, 1), (0, 2), (1, 2)):
        A, B = stats[a], stats[b]
        d = (A.mean(0) - B.mean(0)) / np.sqrt((A.var(0, ddof=1) + B.var(0, ddof=1)) / 2)
        assert np.all(np.abs(d) > 1), (a, b, d)


# ---- scripts and corpora ---------------------------------------------------


def one_layer_config(label=0, seconds=10.0, dwell=0.0):
    script = ProcessScript((Layer(label, seconds, (0.0, 0.0, 0.0), (20.0, 0.0, 0.0), dwell),), "one")
    return CorpusConfig([script])


def test_single_layer_corpus(tmp_path):
    m = generate_corpus(one_layer_config(), 1, tmp_path)
    segs = m.files[0].segments
    assert len(segs) == 20 and all(s.label == 0 for s in segs)
    mid = segs[9]  # covers 4.5-5.0 s, midpoint 4.75 s of a 10 s pass
    assert mid.position[0] == pytest.approx(20.0 * 4.75 / 10.0)
    pos = read_positions(tmp_path / m.files[0].positions)
    assert pos.shape[1] == 4 and pos[1, 0] == pytest.approx(1 / 30, abs=1e-6)


def test_midpoint_labels_and_tiling(tmp_path):
    layers = (
        Layer(0, 1.25, (0.0, 0.0, 0.0), (5.0, 0.0, 0.0), 0.0),
        Layer(1, 1.0, (5.0, 0.0, 0.0), (0.0, 0.0, 0.5), 0.5),
        Layer(2, 1.0, (0.0, 0.0, 0.5), (5.0, 0.0, 0.5), 0.0),
    )
    cfg = CorpusConfig([ProcessScript(layers, "mix")])
    m = generate_corpus(cfg, 2, tmp_path)
    f = m.files[0]
    spans = sorted([(s.start_ms, s.end_ms) for s in f.segments] + list(f.dwell))
    assert spans[0][0] == 0 and all(a[1] == b[0] for a, b in zip(spans, spans[1:]))
    assert spans[-1][1] == 3500  # 3.75 s build, partial tail dropped
    labels = {s.start_ms: (s.label, s.straddles) for s in f.segments}
    assert labels[500] == (0, False)
    assert labels[1000] == (1, True)  # midpoint 1.25 s is where layer 1 starts
    assert labels[1500] == (1, False)
    assert labels[2500] == (2, True)
    assert f.dwell == [(2000, 2500)]


def test_default_counts_match_config(tmp_path):
    cfg = default_corpus_config()
    assert cfg.expected_counts() == {0: 650, 1: 350, 2: 300}
    small = CorpusConfig(cfg.scripts[:1])
    m = generate_corpus(small, 5, tmp_path)
    assert m.counts() == small.expected_counts() == {0: 130, 1: 70, 2: 60}


def test_corpus_is_deterministic(tmp_path):
    cfg = one_layer_config(2, 3.0)
    a = generate_corpus(cfg, 11, tmp_path / "a")
    b = generate_corpus(cfg, 11, tmp_path / "b")
    for name in ("one.wav", "one.positions.csv", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    c = generate_corpus(cfg, 12, tmp_path / "c")
    assert (tmp_path / "a" / "one.wav").read_bytes() != (tmp_path / "c" / "one.wav").read_bytes()
    assert a.config_hash == b.config_hash == cfg.config_hash()


def test_manifest_round_trip(tmp_path):
    m = generate_corpus(one_layer_config(1, 2.0, dwell=1.0), 3, tmp_path)
    back = DatasetManifest.load(tmp_path / "manifest.json")
    assert json.loads(json.dumps(back.to_dict())) == json.loads(json.dumps(m.to_dict()))
    assert len(load_wav(back.path(back.files[0].wav))) == back.files[0].n_samples
    (tmp_path / "bad.json").write_text(json.dumps({"format": "x"}))
    with pytest.raises(SynthError):
        DatasetManifest.load(tmp_path / "bad.json")


def test_config_dict_round_trip():
    cfg = default_corpus_config(2)
    back = CorpusConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert back.config_hash() == cfg.config_hash()


def test_wall_script_geometry():
    s = ProcessScript.wall([0, 1, 2], layer_seconds=2.0, dwell=1.0, length_mm=10.0)
    assert s.duration == 8.0
    np.testing.assert_allclose(s.position([0.0, 1.0, 2.5, 3.0, 4.0]), [
        [0, 0, 0], [5, 0, 0], [10, 0, 0], [10, 0, 0.5], [5, 0, 0.5],
    ])
    assert s.layers[-1].dwell == 0.0
