"""Audio containers, WAV I/O, framing, STFT and 500 ms segmentation."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.io import wavfile

SEGMENT_SECONDS = 0.5


class AudioError(ValueError):
    """Raised for invalid audio data or unsupported files."""


@dataclass(frozen=True)
class AudioClip:
    """Mono audio with a sample rate and the timestamp of its first sample."""

    samples: np.ndarray
    sample_rate: int
    origin: float = 0.0

    def __post_init__(self) -> None:
        samples = np.array(self.samples, dtype=np.float64, copy=True).reshape(-1)
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise AudioError(f"sample_rate must be a positive integer, got {self.sample_rate}")
        if not np.all(np.isfinite(samples)):
            raise AudioError("samples contain NaN or Inf")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))
        object.__setattr__(self, "origin", float(self.origin))

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    def with_samples(self, samples: np.ndarray) -> "AudioClip":
        return AudioClip(samples, self.sample_rate, self.origin)

    def slice(self, start: int, stop: int) -> "AudioClip":
        return AudioClip(
            self.samples[start:stop], self.sample_rate, self.origin + start / self.sample_rate
        )


class Window(str, enum.Enum):
    HANN = "hann"
    RECTANGULAR = "rectangular"


@dataclass(frozen=True)
class FramingConfig:
    frame_size: int = 512
    hop: int = 256
    window: Window = Window.HANN

    def __post_init__(self) -> None:
        if not 0 < self.hop <= self.frame_size:
            raise ValueError(f"need 0 < hop <= frame_size, got hop={self.hop}, frame_size={self.frame_size}")
        object.__setattr__(self, "window", Window(self.window))

    @property
    def n_bins(self) -> int:
        return self.frame_size // 2 + 1

    def window_array(self) -> np.ndarray:
        if self.window is Window.HANN:
            # periodic Hann
            n = np.arange(self.frame_size)
            return 0.5 - 0.5 * np.cos(2.0 * np.pi * n / self.frame_size)
        return np.ones(self.frame_size)

    def n_frames(self, n_samples: int) -> int:
        if n_samples < self.frame_size:
            return 0
        return (n_samples - self.frame_size) // self.hop + 1


@dataclass(frozen=True)
class Spectrogram:
    """One-sided STFT, shape (n_bins, n_frames)."""

    bins: np.ndarray
    frame_size: int
    hop: int
    sample_rate: int
    window: Window = Window.HANN
    length: int | None = None
    origin: float = 0.0

    def __post_init__(self) -> None:
        if self.bins.ndim != 2 or self.bins.shape[0] != self.frame_size // 2 + 1:
            raise ValueError(
                f"bins shape {self.bins.shape} inconsistent with frame_size {self.frame_size}"
            )

    @property
    def n_frames(self) -> int:
        return self.bins.shape[1]

    @property
    def framing(self) -> FramingConfig:
        return FramingConfig(self.frame_size, self.hop, self.window)

    def frequencies(self) -> np.ndarray:
        return np.arange(self.bins.shape[0]) * self.sample_rate / self.frame_size

    def magnitude(self) -> np.ndarray:
        return np.abs(self.bins)

    def with_bins(self, bins: np.ndarray) -> "Spectrogram":
        return Spectrogram(
            bins, self.frame_size, self.hop, self.sample_rate, self.window, self.length, self.origin
        )


@dataclass(frozen=True)
class Segment:
    clip: AudioClip
    index: int
    start: float
    duration: float = SEGMENT_SECONDS

    @property
    def end(self) -> float:
        return self.start + self.duration


def load_wav(path: str | Path) -> AudioClip:
    """Read a 16-bit PCM or 32-bit float WAV as a mono clip.

    Stereo is downmixed by channel mean, integers are scaled by 1/32768 and
    the sample rate is kept as-is.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(path)
    try:
        rate, data = wavfile.read(path)
    except ValueError as exc:
        raise AudioError(f"{path}: {exc}") from exc
    if data.dtype == np.int16:
        data = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        data = data.astype(np.float64)
    else:
        raise AudioError(f"{path}: unsupported sample encoding {data.dtype}")
    if data.ndim == 2:
        data = data.mean(axis=1)
    if data.shape[0] == 0:
        raise AudioError(f"{path}: zero-length audio")
    return AudioClip(data, rate)


def save_wav(clip: AudioClip, path: str | Path) -> None:
    """Write a mono 32-bit float WAV. Values outside [-1, 1] are kept."""
    data = np.asarray(clip.samples, dtype=np.float32)
    if not np.all(np.isfinite(data)):
        raise AudioError("cannot write non-finite samples")
    wavfile.write(Path(path), clip.sample_rate, data)


def frame_signal(clip: AudioClip | np.ndarray, cfg: FramingConfig = FramingConfig()) -> np.ndarray:
    """Non-centered framing: frame t covers [t*hop, t*hop + frame_size).

    Returns a read-only (n_frames, frame_size) view; the trailing remainder
    is discarded.
    """
    x = clip.samples if isinstance(clip, AudioClip) else np.asarray(clip, dtype=np.float64)
    n = cfg.n_frames(x.shape[0])
    if n == 0:
        raise AudioError(f"signal of {x.shape[0]} samples is shorter than one frame ({cfg.frame_size})")
    return np.lib.stride_tricks.as_strided(
        x, shape=(n, cfg.frame_size), strides=(x.strides[0] * cfg.hop, x.strides[0]), writeable=False
    )


def stft(clip: AudioClip, cfg: FramingConfig = FramingConfig()) -> Spectrogram:
    frames = frame_signal(clip, cfg) * cfg.window_array()
    bins = np.fft.rfft(frames, axis=1).T
    return Spectrogram(
        np.ascontiguousarray(bins), cfg.frame_size, cfg.hop, clip.sample_rate, cfg.window,
        len(clip), clip.origin,
    )


def window_square_sum(cfg: FramingConfig, n_frames: int, length: int) -> np.ndarray:
    """Overlap-added squared window, the istft normaliser."""
    w2 = cfg.window_array() ** 2
    total = np.zeros(max(length, (n_frames - 1) * cfg.hop + cfg.frame_size if n_frames else 0))
    for t in range(n_frames):
        total[t * cfg.hop : t * cfg.hop + cfg.frame_size] += w2
    return total[:length]


# Divisor floor for the squared-window sum. Near the clip edges the sum falls
# towards zero; dividing a masked (inconsistent) frame by it would blow up, so
# those few samples are faded instead. Away from the edges the sum is >= 0.5.
WSUM_FLOOR = 1e-2


def overlap_add(frames: np.ndarray, cfg: FramingConfig, length: int) -> np.ndarray:
    """Windowed overlap-add of time-domain frames, normalised by the squared window sum."""
    n_frames = frames.shape[0]
    span = (n_frames - 1) * cfg.hop + cfg.frame_size if n_frames else 0
    out = np.zeros(max(length, span))
    w = cfg.window_array()
    for t in range(n_frames):
        out[t * cfg.hop : t * cfg.hop + cfg.frame_size] += frames[t] * w
    out = out[:length]
    return out / np.maximum(window_square_sum(cfg, n_frames, length), WSUM_FLOOR)


def istft(spec: Spectrogram) -> AudioClip:
    """Overlap-add inverse of :func:`stft`.

    Exact (to rounding) wherever the squared-window sum reaches ``WSUM_FLOOR``,
    that is everywhere except the first and last few dozen samples; samples
    past the last frame are zero.
    """
    cfg = spec.framing
    length = spec.length if spec.length is not None else (spec.n_frames - 1) * spec.hop + spec.frame_size
    if spec.n_frames and length < (spec.n_frames - 1) * spec.hop + spec.frame_size:
        raise ValueError("spectrogram has more frames than its declared length allows")
    frames = np.fft.irfft(spec.bins.T, n=spec.frame_size, axis=1)
    return AudioClip(overlap_add(frames, cfg, length), spec.sample_rate, spec.origin)


def segment_clip(clip: AudioClip, seconds: float = SEGMENT_SECONDS) -> list[Segment]:
    """Split into consecutive, non-overlapping segments; the partial tail is dropped."""
    size = int(round(seconds * clip.sample_rate))
    if size <= 0:
        raise ValueError("segment duration must be positive")
    count = len(clip) // size
    if count == 0:
        raise AudioError(f"clip of {clip.duration:.3f} s is shorter than one {seconds} s segment")
    return [
        Segment(clip.slice(i * size, (i + 1) * size), i, clip.origin + i * seconds, seconds)
        for i in range(count)
    ]
