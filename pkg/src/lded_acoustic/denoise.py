"""Three-stage denoising: STFT equaliser, Butterworth bandpass, HPSS."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage, signal

from .signal_core import AudioClip, FramingConfig, Spectrogram, istft, stft


class DenoiseConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EqualizerProfile:
    """Piecewise-constant gain over frequency bands.

    ``bands`` holds ``(low_hz, high_hz, gain_db)`` triples; ``high_hz=None``
    on the last band means "up to Nyquist".
    """

    bands: tuple[tuple[float, float | None, float], ...]

    def __post_init__(self) -> None:
        bands = tuple(
            (float(lo), None if hi is None else float(hi), float(g)) for lo, hi, g in self.bands
        )
        if not bands:
            raise DenoiseConfigError("equalizer needs at least one band")
        if bands[0][0] != 0.0:
            raise DenoiseConfigError("first equalizer band must start at 0 Hz")
        for (lo, hi, g), nxt in zip(bands, bands[1:] + (None,)):
            if not np.isfinite(g):
                raise DenoiseConfigError("equalizer gains must be finite")
            if hi is None:
                if nxt is not None:
                    raise DenoiseConfigError("only the last band may extend to Nyquist")
                continue
            if hi <= lo:
                raise DenoiseConfigError(f"empty band ({lo}, {hi})")
            if nxt is not None and nxt[0] != hi:
                raise DenoiseConfigError(f"bands must be contiguous: {hi} != {nxt[0]}")
        object.__setattr__(self, "bands", bands)

    @classmethod
    def default(cls) -> "EqualizerProfile":
        return cls(((0.0, 1000.0, -60.0), (1000.0, 20000.0, 6.0), (20000.0, None, -60.0)))

    @classmethod
    def flat(cls, gain_db: float = 0.0) -> "EqualizerProfile":
        return cls(((0.0, None, gain_db),))

    def bin_gains(self, sample_rate: int, frame_size: int) -> np.ndarray:
        """Linear amplitude gain for every one-sided FFT bin."""
        nyquist = sample_rate / 2.0
        for lo, hi, _ in self.bands:
            if lo >= nyquist or (hi is not None and hi > nyquist):
                raise DenoiseConfigError(f"band ({lo}, {hi}) lies outside Nyquist {nyquist}")
        last_hi = self.bands[-1][1]
        if last_hi is not None and last_hi < nyquist:
            raise DenoiseConfigError(f"bands stop at {last_hi} Hz, below Nyquist {nyquist}")
        freqs = np.arange(frame_size // 2 + 1) * sample_rate / frame_size
        gains = np.empty_like(freqs)
        for lo, hi, g in self.bands:
            upper = np.inf if hi is None or hi >= nyquist else hi
            sel = (freqs >= lo) & (freqs < upper)
            gains[sel] = 10.0 ** (g / 20.0)
        return gains


class FilterMode(str, enum.Enum):
    CAUSAL = "causal"
    ZERO_PHASE = "zero_phase"


@dataclass(frozen=True)
class BandpassSpec:
    low_hz: float = 1000.0
    high_hz: float = 21000.0
    order: int = 3
    mode: FilterMode = FilterMode.CAUSAL

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", FilterMode(self.mode))
        if not 0 < self.low_hz < self.high_hz:
            raise DenoiseConfigError(f"need 0 < low < high, got {self.low_hz}, {self.high_hz}")
        if self.order < 1:
            raise DenoiseConfigError("filter order must be >= 1")

    def sos(self, sample_rate: int) -> np.ndarray:
        """Second-order sections of the digital Butterworth design (bilinear, prewarped)."""
        if self.high_hz >= sample_rate / 2.0:
            raise DenoiseConfigError(
                f"upper edge {self.high_hz} Hz must be below Nyquist {sample_rate / 2.0} Hz"
            )
        return signal.butter(
            self.order, [self.low_hz, self.high_hz], btype="bandpass", fs=sample_rate, output="sos"
        )


@dataclass(frozen=True)
class HpssConfig:
    kernel_time: int = 17
    kernel_freq: int = 17
    power: float = 2.0
    framing: FramingConfig = field(default_factory=FramingConfig)

    def __post_init__(self) -> None:
        for k in (self.kernel_time, self.kernel_freq):
            if k < 3 or k % 2 == 0:
                raise DenoiseConfigError(f"HPSS kernels must be odd and >= 3, got {k}")
        if self.power <= 0:
            raise DenoiseConfigError("mask power must be positive")

    @property
    def lookahead_frames(self) -> int:
        return self.kernel_time // 2


@dataclass(frozen=True)
class DenoiseStages:
    raw: AudioClip
    equalized: AudioClip
    bandpassed: AudioClip
    denoised: AudioClip

    def stage(self, name: str) -> AudioClip:
        return {"raw": self.raw, "eq": self.equalized, "bp": self.bandpassed, "dn": self.denoised}[name]


STAGE_NAMES = ("raw", "eq", "bp", "dn")


def equalize(clip: AudioClip, profile: EqualizerProfile, framing: FramingConfig = FramingConfig()) -> AudioClip:
    """Scale each STFT bin by its band's linear gain (phase untouched) and resynthesise."""
    gains = profile.bin_gains(clip.sample_rate, framing.frame_size)
    spec = stft(clip, framing)
    return istft(spec.with_bins(spec.bins * gains[:, None]))


def bandpass(clip: AudioClip, spec: BandpassSpec = BandpassSpec()) -> AudioClip:
    sos = spec.sos(clip.sample_rate)
    if spec.mode is FilterMode.ZERO_PHASE:
        y = signal.sosfiltfilt(sos, clip.samples)
    else:
        y = signal.sosfilt(sos, clip.samples)
    return clip.with_samples(y)


def hpss_masks(magnitude: np.ndarray, cfg: HpssConfig) -> tuple[np.ndarray, np.ndarray]:
    """Soft harmonic/percussive masks from a magnitude spectrogram (bins x frames).

    Median filters use edge replication. Masks sum to one wherever the
    filtered magnitudes are not both zero; silent cells split 0.5/0.5.
    """
    harm = ndimage.median_filter(magnitude, size=(1, cfg.kernel_time), mode="nearest")
    perc = ndimage.median_filter(magnitude, size=(cfg.kernel_freq, 1), mode="nearest")
    return soft_masks(harm, perc, cfg.power)


def soft_masks(harm: np.ndarray, perc: np.ndarray, power: float) -> tuple[np.ndarray, np.ndarray]:
    hp = harm**power
    pp = perc**power
    denom = hp + pp
    live = denom > 0
    mask_h = np.full(denom.shape, 0.5)
    mask_p = np.full(denom.shape, 0.5)
    np.divide(hp, denom, out=mask_h, where=live)
    np.divide(pp, denom, out=mask_p, where=live)
    return mask_h, mask_p


def hpss(clip: AudioClip, cfg: HpssConfig = HpssConfig()) -> tuple[AudioClip, AudioClip]:
    """Median-filtering harmonic/percussive separation; returns (harmonic, percussive)."""
    spec = stft(clip, cfg.framing)
    mask_h, mask_p = hpss_masks(np.abs(spec.bins), cfg)
    return istft(spec.with_bins(spec.bins * mask_h)), istft(spec.with_bins(spec.bins * mask_p))


def denoise_pipeline(
    clip: AudioClip,
    eq: EqualizerProfile | None = None,
    bp: BandpassSpec | None = None,
    hp: HpssConfig | None = None,
) -> DenoiseStages:
    """equalize -> bandpass -> percussive part of HPSS, keeping every stage."""
    eq = eq or EqualizerProfile.default()
    bp = bp or BandpassSpec()
    hp = hp or HpssConfig()
    equalized = equalize(clip, eq, hp.framing)
    bandpassed = bandpass(equalized, bp)
    _, percussive = hpss(bandpassed, hp)
    return DenoiseStages(clip, equalized, bandpassed, percussive)


@dataclass(frozen=True)
class DenoiseConfig:
    equalizer: EqualizerProfile = field(default_factory=EqualizerProfile.default)
    bandpass: BandpassSpec = field(default_factory=BandpassSpec)
    hpss: HpssConfig = field(default_factory=HpssConfig)

    def to_dict(self) -> dict:
        return {
            "equalizer": {"bands": [list(b) for b in self.equalizer.bands]},
            "bandpass": {
                "low": self.bandpass.low_hz,
                "high": self.bandpass.high_hz,
                "order": self.bandpass.order,
                "mode": self.bandpass.mode.value,
            },
            "hpss": {
                "kernel_time": self.hpss.kernel_time,
                "kernel_freq": self.hpss.kernel_freq,
                "power": self.hpss.power,
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DenoiseConfig":
        defaults = cls()
        eq = defaults.equalizer
        if "equalizer" in data:
            eq = EqualizerProfile(tuple(tuple(b) for b in data["equalizer"]["bands"]))
        bp = defaults.bandpass
        if "bandpass" in data:
            d = data["bandpass"]
            mode = d.get("mode", "causal").lower().replace("-", "_").replace("zerophase", "zero_phase")
            bp = BandpassSpec(d.get("low", 1000.0), d.get("high", 21000.0), int(d.get("order", 3)), mode)
        hp = defaults.hpss
        if "hpss" in data:
            d = data["hpss"]
            hp = HpssConfig(int(d.get("kernel_time", 17)), int(d.get("kernel_freq", 17)), float(d.get("power", 2.0)))
        return cls(eq, bp, hp)

    @classmethod
    def load(cls, path: str | Path) -> "DenoiseConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def run(self, clip: AudioClip) -> DenoiseStages:
        return denoise_pipeline(clip, self.equalizer, self.bandpass, self.hpss)
