"""Mel filterbank and normalised MFCC matrices for the CNN."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft

from .signal_core import AudioClip, FramingConfig, Segment, stft

N_MFCC = 20
LOG_EPS = 1e-10
SEGMENT_SAMPLES = 22050
SEGMENT_FRAMES = 85


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


@dataclass(frozen=True, eq=False)
class MelFilterbank:
    weights: np.ndarray  # (n_mels, n_bins), area-normalised
    sample_rate: int
    frame_size: int
    f_min: float
    f_max: float
    edges_hz: np.ndarray  # n_mels + 2 triangle corner frequencies

    @property
    def n_mels(self) -> int:
        return self.weights.shape[0]

    def triangles(self) -> np.ndarray:
        """Filters before area normalisation (peak value 1)."""
        width = self.edges_hz[2:] - self.edges_hz[:-2]
        return self.weights * (width / 2.0)[:, None]


@lru_cache(maxsize=16)
def mel_filterbank(
    sample_rate: int = 44100,
    frame_size: int = 512,
    n_mels: int = 40,
    f_min: float = 0.0,
    f_max: float | None = None,
) -> MelFilterbank:
    """Triangular filters equally spaced on the mel scale, scaled by 2/(f_upper - f_lower)."""
    if n_mels < 2:
        raise ValueError("n_mels must be >= 2")
    f_max = sample_rate / 2.0 if f_max is None else float(f_max)
    freqs = np.arange(frame_size // 2 + 1) * sample_rate / frame_size
    edges = mel_to_hz(np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_mels + 2))
    lower, centre, upper = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs - lower) / (centre - lower)
    falling = (upper - freqs) / (upper - centre)
    tri = np.maximum(0.0, np.minimum(rising, falling))
    empty = np.flatnonzero(tri.sum(axis=1) <= 0)
    if empty.size:
        raise ValueError(
            f"n_mels={n_mels} too large for {frame_size}-point frames: filters {empty.tolist()} cover no bins"
        )
    weights = tri * (2.0 / (upper - lower))
    weights.setflags(write=False)
    edges.setflags(write=False)
    return MelFilterbank(weights, sample_rate, frame_size, float(f_min), f_max, edges)


def dct_ii(x: np.ndarray, axis: int = 0) -> np.ndarray:
    """Orthonormal DCT-II."""
    return scipy.fft.dct(x, type=2, norm="ortho", axis=axis)


def normalize_minmax(matrix: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Map the whole matrix onto [-1, 1]; a constant matrix maps to zeros."""
    lo, hi = float(matrix.min()), float(matrix.max())
    if hi <= lo:
        return np.zeros_like(matrix, dtype=np.float64), lo, hi
    return 2.0 * (matrix - lo) / (hi - lo) - 1.0, lo, hi


@dataclass(frozen=True)
class MfccMatrix:
    coefficients: np.ndarray  # (n_mfcc, frames), in [-1, 1]
    min: float
    max: float

    @property
    def shape(self) -> tuple[int, int]:
        return self.coefficients.shape


def log_mel_energies(clip: AudioClip, cfg: FramingConfig = FramingConfig(), fb: MelFilterbank | None = None) -> np.ndarray:
    """log(mel power + LOG_EPS), shape (n_mels, frames)."""
    fb = fb or mel_filterbank(clip.sample_rate, cfg.frame_size)
    if fb.sample_rate != clip.sample_rate or fb.frame_size != cfg.frame_size:
        raise ValueError("filterbank was built for a different sample rate or frame size")
    power = np.abs(stft(clip, cfg).bins) ** 2
    return np.log(fb.weights @ power + LOG_EPS)


def mfcc_raw(
    clip: AudioClip,
    cfg: FramingConfig = FramingConfig(),
    fb: MelFilterbank | None = None,
    n_mfcc: int = N_MFCC,
) -> np.ndarray:
    """Un-normalised cepstral coefficients, shape (n_mfcc, frames)."""
    return dct_ii(log_mel_energies(clip, cfg, fb), axis=0)[:n_mfcc]


def mfcc(
    segment: Segment | AudioClip,
    cfg: FramingConfig = FramingConfig(),
    fb: MelFilterbank | None = None,
    n_mfcc: int = N_MFCC,
) -> MfccMatrix:
    """Min-max normalised MFCCs.

    A constant log-mel input (silence, for one) carries no spectral shape and
    maps to an all-zero matrix rather than to c0 against the rest.
    """
    clip = segment.clip if isinstance(segment, Segment) else segment
    log_mel = log_mel_energies(clip, cfg, fb)
    raw = dct_ii(log_mel, axis=0)[:n_mfcc]
    if log_mel.max() == log_mel.min():
        return MfccMatrix(np.zeros_like(raw), float(raw.min()), float(raw.max()))
    coeffs, lo, hi = normalize_minmax(raw)
    return MfccMatrix(coeffs, lo, hi)


def mfcc_segment_tensor(segment: Segment | AudioClip) -> np.ndarray:
    """The CNN input: a 20 x 85 matrix from exactly 22050 samples at default framing."""
    clip = segment.clip if isinstance(segment, Segment) else segment
    if len(clip) != SEGMENT_SAMPLES:
        raise ValueError(f"segment must have exactly {SEGMENT_SAMPLES} samples, got {len(clip)}")
    out = mfcc(clip).coefficients
    if out.shape != (N_MFCC, SEGMENT_FRAMES):
        raise ValueError(f"unexpected MFCC shape {out.shape}")
    return out
