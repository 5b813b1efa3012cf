"""Per-frame time and spectral descriptors and their per-segment statistics.

Bin index ``n`` runs from 0 to N-1 over the one-sided spectrum, so centroid,
bandwidth and rolloff are expressed in bins, not Hz.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .signal_core import AudioClip, FramingConfig, Segment, Spectrogram, frame_signal, stft

LOG_FLOOR = 1e-12
RATIO_FLOOR = 1e-12
RATIO_CAP = 1e12

TIME_FEATURES = ("AE", "RMS", "ZCR")
SPECTRAL_FEATURES = (
    "S-centroid",
    "S-bandwidth",
    "S-rolloff",
    "S-flatness",
    "BER",
    "S-contrast",
    "S-variance",
    "S-skewness",
    "S-kurtosis",
    "S-crest",
    "S-entropy",
    "S-flux",
)
FEATURE_NAMES = TIME_FEATURES + SPECTRAL_FEATURES
STAT_NAMES = tuple(f"{name} {stat}" for name in FEATURE_NAMES for stat in ("mean", "var"))

# inputs of the classic models, in this order
SELECTED_FEATURES = (
    "S-bandwidth mean",
    "S-entropy mean",
    "BER mean",
    "BER var",
    "S-centroid var",
    "ZCR var",
    "ZCR mean",
    "S-flux var",
    "S-centroid mean",
    "S-variance mean",
)


@dataclass(frozen=True)
class SpectralParams:
    rolloff_eta: float = 0.85
    ber_split_hz: float = 7000.0
    contrast_quantile: float = 0.2
    flux_norm_p: float = 2.0


@dataclass(frozen=True)
class FrameFeatureSeries:
    name: str
    values: np.ndarray
    hop: int = 256
    sample_rate: int = 44100

    def __len__(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class SegmentFeatureVector:
    values: dict[str, float]
    segment_index: int = 0
    start: float = 0.0

    def __getitem__(self, name: str) -> float:
        return self.values[name]

    def as_array(self, names=STAT_NAMES) -> np.ndarray:
        return np.array([self.values[n] for n in names])


def _frames(frames) -> np.ndarray:
    frames = np.atleast_2d(np.asarray(frames, dtype=np.float64))
    if frames.shape[0] == 0 or frames.shape[1] == 0:
        raise ValueError("need at least one non-empty frame")
    return frames


def amplitude_envelope(frames) -> np.ndarray:
    """Peak absolute amplitude per frame."""
    return np.abs(_frames(frames)).max(axis=1)


def rms_energy(frames) -> np.ndarray:
    f = _frames(frames)
    return np.sqrt(np.mean(f * f, axis=1))


def zero_crossing_rate(frames) -> np.ndarray:
    """Half the summed |sgn(s_k) - sgn(s_k+1)| within each frame (a count)."""
    f = _frames(frames)
    if f.shape[1] < 2:
        raise ValueError("zero crossing rate needs at least two samples per frame")
    s = np.sign(f)
    return 0.5 * np.abs(np.diff(s, axis=1)).sum(axis=1)


def zcr_per_second(zcr: np.ndarray, frame_size: int, sample_rate: int) -> np.ndarray:
    return zcr * sample_rate / frame_size


def _safe_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = num / np.maximum(den, RATIO_FLOOR)
    return np.minimum(out, RATIO_CAP)


def spectral_descriptors(
    magnitude: np.ndarray | Spectrogram,
    sample_rate: int | None = None,
    frame_size: int | None = None,
    params: SpectralParams = SpectralParams(),
) -> dict[str, np.ndarray]:
    """Twelve spectral descriptors per frame from magnitudes shaped (bins, frames).

    All-zero frames get fixed values (SF=1, crest=1, the rest 0) instead of NaN.
    """
    if isinstance(magnitude, Spectrogram):
        sample_rate, frame_size = magnitude.sample_rate, magnitude.frame_size
        m = np.abs(magnitude.bins)
    else:
        m = np.asarray(magnitude, dtype=np.float64)
        if sample_rate is None or frame_size is None:
            raise ValueError("sample_rate and frame_size are required with a raw magnitude array")
    if m.ndim != 2 or m.size == 0:
        raise ValueError("magnitude must be a non-empty (bins, frames) array")
    n_bins = m.shape[0]
    n = np.arange(n_bins, dtype=np.float64)[:, None]

    total = m.sum(axis=0)
    live = total > 0
    safe_total = np.where(live, total, 1.0)

    centroid = np.where(live, (n * m).sum(axis=0) / safe_total, 0.0)
    dev = n - centroid
    bandwidth = np.where(live, (np.abs(dev) * m).sum(axis=0) / safe_total, 0.0)
    variance = np.where(live, np.sqrt((dev**2 * m).sum(axis=0) / safe_total), 0.0)
    has_spread = live & (variance > 0)
    safe_var = np.where(has_spread, variance, 1.0)
    skewness = np.where(has_spread, (dev**3 * m).sum(axis=0) / (safe_var**3 * safe_total), 0.0)
    kurtosis = np.where(has_spread, (dev**4 * m).sum(axis=0) / (safe_var**4 * safe_total), 0.0)

    cumulative = np.cumsum(m, axis=0)
    reached = cumulative >= params.rolloff_eta * total
    rolloff = np.where(live, reached.argmax(axis=0), 0).astype(np.float64)

    log_mean = np.log(np.maximum(m, LOG_FLOOR)).mean(axis=0)
    flatness = np.where(live, np.exp(log_mean) / (safe_total / n_bins), 1.0)

    power = m * m
    split = int(np.ceil(params.ber_split_hz * frame_size / sample_rate))
    low = power[:split].sum(axis=0)
    high = power[split:].sum(axis=0)
    ber = np.where(low > 0, _safe_ratio(low, high), 0.0)

    q = max(1, int(np.floor(params.contrast_quantile * n_bins)))
    ordered = np.sort(power, axis=0)
    peak = ordered[-q:].mean(axis=0)
    valley = ordered[:q].mean(axis=0)
    contrast = np.where(live, _safe_ratio(peak, valley), 1.0)

    crest = np.where(live, m.max(axis=0) / (safe_total / n_bins), 1.0)

    prob = m / safe_total
    plogp = np.where(prob > 0, prob * np.log(np.where(prob > 0, prob, 1.0)), 0.0)
    entropy = np.where(live, -plogp.sum(axis=0) / np.log(n_bins), 0.0)

    p = params.flux_norm_p
    flux = np.zeros(m.shape[1])
    if m.shape[1] > 1:
        flux[1:] = (np.abs(np.diff(m, axis=1)) ** p).sum(axis=0) ** (1.0 / p)

    return {
        "S-centroid": centroid,
        "S-bandwidth": bandwidth,
        "S-rolloff": rolloff,
        "S-flatness": flatness,
        "BER": ber,
        "S-contrast": contrast,
        "S-variance": variance,
        "S-skewness": skewness,
        "S-kurtosis": kurtosis,
        "S-crest": crest,
        "S-entropy": entropy,
        "S-flux": flux,
    }


def frame_features(
    clip: AudioClip, cfg: FramingConfig = FramingConfig(), params: SpectralParams = SpectralParams()
) -> dict[str, FrameFeatureSeries]:
    """All fifteen per-frame series for a clip. Time features use unwindowed frames."""
    frames = frame_signal(clip, cfg)
    series = {
        "AE": amplitude_envelope(frames),
        "RMS": rms_energy(frames),
        "ZCR": zero_crossing_rate(frames),
    }
    series.update(spectral_descriptors(stft(clip, cfg), params=params))
    return {
        name: FrameFeatureSeries(name, series[name], cfg.hop, clip.sample_rate) for name in FEATURE_NAMES
    }


def aggregate_segment(series: dict[str, FrameFeatureSeries] | dict[str, np.ndarray], segment: Segment | None = None) -> SegmentFeatureVector:
    """Population mean and variance of every series, keyed '<name> mean' / '<name> var'."""
    arrays = {k: (v.values if isinstance(v, FrameFeatureSeries) else np.asarray(v)) for k, v in series.items()}
    lengths = {a.shape[0] for a in arrays.values()}
    if len(lengths) != 1:
        raise ValueError(f"series have mismatched frame counts: {sorted(lengths)}")
    values: dict[str, float] = {}
    for name, arr in arrays.items():
        mean = float(arr.mean())
        values[f"{name} mean"] = mean
        values[f"{name} var"] = float(np.mean((arr - mean) ** 2))
    if segment is None:
        return SegmentFeatureVector(values)
    return SegmentFeatureVector(values, segment.index, segment.start)


def segment_feature_vector(
    segment: Segment, cfg: FramingConfig = FramingConfig(), params: SpectralParams = SpectralParams()
) -> SegmentFeatureVector:
    return aggregate_segment(frame_features(segment.clip, cfg, params), segment)
