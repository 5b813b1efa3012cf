"""Seeded synthetic deposition-sound corpora with labels and a scan-position stream.

Each regime is rendered as band-shaped Gaussian noise with amplitude modulation
and, for the crack regime, Poisson-timed decaying bursts. Machine noise (hum,
rumble and knocks below 1 kHz, tonal whine and a white floor) is mixed in at a
target SNR, and every 500 ms segment is labeled and tagged with a position.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .signal_core import SEGMENT_SECONDS, AudioClip, AudioError, save_wav

MANIFEST_FORMAT = "lded-acoustic-manifest"
MANIFEST_VERSION = 1
POSITION_RATE = 30.0
DEFAULT_SAMPLE_RATE = 44100


class SynthError(ValueError):
    pass


# ------------------------------------------------------------------ regimes


@dataclass(frozen=True)
class Band:
    low_hz: float
    high_hz: float
    power: float

    def __post_init__(self) -> None:
        if self.power < 0:
            raise SynthError("band power must be nonnegative")
        if not 0 <= self.low_hz < self.high_hz:
            raise SynthError(f"invalid band {self.low_hz}-{self.high_hz} Hz")


@dataclass(frozen=True)
class BurstSpec:
    """Impulsive events: Poisson rate per second, e-folding duration and gain over the base RMS."""

    rate: float = 3.0
    duration: float = 0.03
    gain: float = 6.0
    low_hz: float = 1000.0
    high_hz: float = 8000.0

    def __post_init__(self) -> None:
        if self.rate < 0:
            raise SynthError("burst rate must be nonnegative")
        if self.duration <= 0:
            raise SynthError("burst duration must be positive")


@dataclass(frozen=True)
class RegimeModel:
    """Class-conditional sound model.

    ``variability`` is the log-normal sigma applied to each band power and to
    the modulation rate every time a layer is rendered.
    """

    label: int
    bands: tuple[Band, ...]
    am_depth: float = 0.1
    am_rate: float = 4.0
    bursts: BurstSpec | None = None
    variability: float = 0.25

    def __post_init__(self) -> None:
        bands = tuple(b if isinstance(b, Band) else Band(**b) for b in self.bands)
        if not bands:
            raise SynthError("regime needs at least one band")
        if isinstance(self.bursts, dict):
            object.__setattr__(self, "bursts", BurstSpec(**self.bursts))
        if self.label not in (0, 1, 2):
            raise SynthError("regime label must be 0, 1 or 2")
        if not 0 <= self.am_depth <= 1:
            raise SynthError("am_depth must lie in [0, 1]")
        object.__setattr__(self, "bands", bands)

    @classmethod
    def defect_free(cls) -> "RegimeModel":
        return cls(0, (Band(5000, 10000, 1.0), Band(1000, 5000, 0.2)), am_depth=0.1, am_rate=4.0)

    @classmethod
    def crack(cls) -> "RegimeModel":
        base = cls.defect_free()
        return replace(base, label=1, bursts=BurstSpec())

    @classmethod
    def keyhole(cls) -> "RegimeModel":
        return cls(2, (Band(0, 5000, 1.0), Band(5000, 10000, 0.3)), am_depth=0.5, am_rate=8.0)

    @staticmethod
    def defaults() -> dict[int, "RegimeModel"]:
        return {0: RegimeModel.defect_free(), 1: RegimeModel.crack(), 2: RegimeModel.keyhole()}


def band_noise(n: int, sample_rate: int, low_hz: float, high_hz: float, rng: np.random.Generator) -> np.ndarray:
    """Unit-power Gaussian noise restricted to [low_hz, high_hz) by FFT masking."""
    spec = np.fft.rfft(rng.standard_normal(n))
    f = np.fft.rfftfreq(n, 1.0 / sample_rate)
    spec[(f < low_hz) | (f >= high_hz)] = 0.0
    x = np.fft.irfft(spec, n)
    p = np.mean(x * x)
    return x / math.sqrt(p) if p > 0 else x


def _n_samples(duration: float, sample_rate: int) -> int:
    if not duration > 0:
        raise SynthError("duration must be positive")
    return int(round(duration * sample_rate))


def synth_regime(model: RegimeModel, duration: float, sample_rate: int = DEFAULT_SAMPLE_RATE, seed=0) -> AudioClip:
    """Render one regime; the result has unit base power before bursts are added."""
    n = _n_samples(duration, sample_rate)
    rng = np.random.default_rng(seed)
    sigma = model.variability
    x = np.zeros(n)
    for band in model.bands:
        jitter = math.exp(sigma * rng.standard_normal()) if sigma > 0 else 1.0
        if band.power > 0:
            x += math.sqrt(band.power * jitter) * band_noise(n, sample_rate, band.low_hz, band.high_hz, rng)
    p = np.mean(x * x)
    if p > 0:
        x /= math.sqrt(p)
    rate = model.am_rate * (math.exp(sigma * rng.standard_normal()) if sigma > 0 else 1.0)
    t = np.arange(n) / sample_rate
    x *= 1.0 + model.am_depth * np.sin(2 * np.pi * rate * t + rng.uniform(0, 2 * np.pi))
    b = model.bursts
    if b is not None and b.rate > 0:
        count = rng.poisson(b.rate * n / sample_rate)
        starts = np.sort(rng.integers(0, n, size=count))
        length = min(n, int(round(8 * b.duration * sample_rate)))
        env = np.exp(-np.arange(length) / (b.duration * sample_rate))
        for s in starts:
            m = min(length, n - s)
            x[s : s + m] += b.gain * env[:m] * band_noise(length, sample_rate, b.low_hz, b.high_hz, rng)[:m]
    return AudioClip(x, sample_rate)


# ------------------------------------------------------------------ noise


@dataclass(frozen=True)
class NoiseModel:
    """Machine and process noise. Weights are power shares of each component."""

    hum_weight: float = 0.25
    hum_f0_range: tuple[float, float] = (50.0, 150.0)
    rumble_weight: float = 0.15
    knock_weight: float = 0.20
    knock_rate: float = 3.0
    knock_decay: float = 0.02
    whine_weight: float = 0.35
    whine_f0_range: tuple[float, float] = (250.0, 600.0)
    whine_max_hz: float = 5000.0
    whine_level_sigma: float = 0.8
    whine_hold: float = 1.5
    broadband_weight: float = 0.05
    snr_db: float = 5.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.snr_db):
            raise SynthError("noise SNR must be finite")
        for name in ("hum_weight", "rumble_weight", "knock_weight", "whine_weight", "broadband_weight"):
            if getattr(self, name) < 0:
                raise SynthError(f"{name} must be nonnegative")
        object.__setattr__(self, "hum_f0_range", tuple(self.hum_f0_range))
        object.__setattr__(self, "whine_f0_range", tuple(self.whine_f0_range))

    @property
    def total_weight(self) -> float:
        return self.hum_weight + self.rumble_weight + self.knock_weight + self.whine_weight + self.broadband_weight


def _unit(x: np.ndarray) -> np.ndarray:
    p = np.mean(x * x)
    return x / math.sqrt(p) if p > 0 else x


def synth_noise(model: NoiseModel, duration: float, sample_rate: int = DEFAULT_SAMPLE_RATE, seed=0) -> AudioClip:
    """Hum, 1/f rumble and knocks below 1 kHz, tonal whine above it, plus a white floor."""
    n = _n_samples(duration, sample_rate)
    rng = np.random.default_rng(seed)
    t = np.arange(n) / sample_rate
    out = np.zeros(n)

    f0 = rng.uniform(*model.hum_f0_range)
    k = np.arange(1, int(1000 // f0) + 1)
    phases = rng.uniform(0, 2 * np.pi, size=k.shape[0])
    hum = np.zeros(n)
    for kk, ph in zip(k, phases):
        hum += np.sin(2 * np.pi * kk * f0 * t + ph) / kk
    out += math.sqrt(model.hum_weight) * _unit(hum)

    spec = np.fft.rfft(rng.standard_normal(n))
    f = np.fft.rfftfreq(n, 1.0 / sample_rate)
    shape = np.zeros_like(f)
    band = (f >= 20.0) & (f < 1000.0)
    shape[band] = 1.0 / np.sqrt(f[band])
    out += math.sqrt(model.rumble_weight) * _unit(np.fft.irfft(spec * shape, n))

    knocks = np.zeros(n)
    count = rng.poisson(model.knock_rate * n / sample_rate)
    length = min(n, int(0.1 * sample_rate))
    env = np.exp(-np.arange(length) / (model.knock_decay * sample_rate))
    for s in np.sort(rng.integers(0, n, size=count)):
        m = min(length, n - s)
        knocks[s : s + m] += env[:m] * band_noise(length, sample_rate, 80.0, 800.0, rng)[:m]
    out += math.sqrt(model.knock_weight) * _unit(knocks)

    # motor whine: a harmonic comb up to ``whine_max_hz`` whose fundamental and
    # level are redrawn every ``whine_hold`` seconds. Phase stays continuous and
    # levels crossfade over 50 ms, so the comb stays harmonic throughout.
    hold = max(1, int(round(model.whine_hold * sample_rate)))
    n_hold = -(-n // hold)
    f0s = rng.uniform(*model.whine_f0_range, size=n_hold)
    levels = np.exp(model.whine_level_sigma * rng.standard_normal(n_hold))
    idx = np.minimum(np.arange(n) // hold, n_hold - 1)
    inst = f0s[idx]
    ramp = max(1, int(0.05 * sample_rate))
    level = np.convolve(np.pad(levels[idx], (ramp // 2, ramp - 1 - ramp // 2), mode="edge"), np.ones(ramp) / ramp, "valid")
    phase = 2 * np.pi * np.cumsum(inst) / sample_rate
    whine = np.zeros(n)
    for h in range(1, int(model.whine_max_hz // model.whine_f0_range[0]) + 1):
        whine += np.sin(h * phase + rng.uniform(0, 2 * np.pi)) * (inst * h <= model.whine_max_hz)
    whine *= level
    out += math.sqrt(model.whine_weight) * _unit(whine)

    out += math.sqrt(model.broadband_weight) * rng.standard_normal(n)
    return AudioClip(out, sample_rate)


def power(x) -> float:
    x = x.samples if isinstance(x, AudioClip) else np.asarray(x, dtype=np.float64)
    return float(np.mean(x * x))


def noise_gain(signal: AudioClip, noise: AudioClip, snr_db: float) -> float:
    """Factor applied to ``noise`` so the mixture has the requested SNR."""
    ps, pn = power(signal), power(noise)
    if ps <= 0 or pn <= 0:
        raise SynthError("cannot mix a zero-power operand")
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    return math.sqrt(ps / (pn * 10.0 ** (snr_db / 10.0)))


def mix(signal: AudioClip, noise: AudioClip, snr_db: float) -> AudioClip:
    """Rescale ``noise`` so 10 log10(P_signal / P_noise) equals ``snr_db`` and add it.

    ``snr_db = inf`` returns the signal unchanged.
    """
    if len(signal) != len(noise) or signal.sample_rate != noise.sample_rate:
        raise SynthError("signal and noise must share length and sample rate")
    g = noise_gain(signal, noise, snr_db)
    if g == 0.0:
        return signal
    return signal.with_samples(signal.samples + g * noise.samples)


# ------------------------------------------------------------------ scripts


Vec3 = tuple[float, float, float]


@dataclass(frozen=True)
class Layer:
    """One deposited track moving linearly from ``start`` to ``end`` (mm), then dwelling."""

    label: int
    duration: float
    start: Vec3
    end: Vec3
    dwell: float = 1.0

    def __post_init__(self) -> None:
        if not self.duration > 0:
            raise SynthError("layer duration must be positive")
        if self.dwell < 0:
            raise SynthError("dwell must be nonnegative")
        if self.label not in (0, 1, 2):
            raise SynthError("layer label must be 0, 1 or 2")
        object.__setattr__(self, "start", tuple(float(v) for v in self.start))
        object.__setattr__(self, "end", tuple(float(v) for v in self.end))

    @property
    def speed(self) -> float:
        """Scan speed in mm/s."""
        return float(np.linalg.norm(np.subtract(self.end, self.start))) / self.duration


@dataclass(frozen=True)
class ProcessScript:
    """Layers of one build, rendered into one WAV file."""

    layers: tuple[Layer, ...]
    name: str = "build"

    def __post_init__(self) -> None:
        layers = tuple(l if isinstance(l, Layer) else Layer(**l) for l in self.layers)
        if not layers:
            raise SynthError("a process script needs at least one layer")
        object.__setattr__(self, "layers", layers)

    @classmethod
    def wall(
        cls,
        labels,
        layer_seconds: float = 5.0,
        dwell: float = 1.0,
        length_mm: float = 50.0,
        layer_height_mm: float = 0.5,
        name: str = "build",
    ) -> "ProcessScript":
        """Single-bead wall with alternating scan direction."""
        layers = []
        for i, lab in enumerate(labels):
            z = i * layer_height_mm
            a, b = (0.0, 0.0, z), (length_mm, 0.0, z)
            if i % 2:
                a, b = b, a
            layers.append(Layer(int(lab), layer_seconds, a, b, dwell))
        layers[-1] = replace(layers[-1], dwell=0.0)
        return cls(tuple(layers), name)

    def timeline(self) -> list[tuple[float, float, int | None, int]]:
        """(start, end, label or None for dwell, layer index) intervals in seconds."""
        out, t = [], 0.0
        for i, layer in enumerate(self.layers):
            out.append((t, t + layer.duration, layer.label, i))
            t += layer.duration
            if layer.dwell > 0:
                out.append((t, t + layer.dwell, None, i))
                t += layer.dwell
        return out

    @property
    def duration(self) -> float:
        return sum(l.duration + l.dwell for l in self.layers)

    def position(self, t) -> np.ndarray:
        """Scan position (mm) at times ``t``; holds the end point while dwelling."""
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))
        out = np.empty((t.shape[0], 3))
        bounds = self.timeline()
        for j, tj in enumerate(t):
            for start, end, label, i in bounds:
                if tj < end or (start, end, label, i) == bounds[-1]:
                    layer = self.layers[i]
                    if label is None:
                        out[j] = layer.end
                    else:
                        u = min(max((tj - start) / layer.duration, 0.0), 1.0)
                        out[j] = np.add(layer.start, u * np.subtract(layer.end, layer.start))
                    break
        return out


# ------------------------------------------------------------------ corpus


@dataclass
class CorpusConfig:
    scripts: list[ProcessScript]
    regimes: dict[int, RegimeModel] = field(default_factory=RegimeModel.defaults)
    noise: NoiseModel = field(default_factory=NoiseModel)
    snr_db: float = 5.0
    sample_rate: int = DEFAULT_SAMPLE_RATE
    level_sigma: float = 0.0

    def to_dict(self) -> dict:
        return {
            "scripts": [
                {"name": s.name, "layers": [asdict(l) for l in s.layers]} for s in self.scripts
            ],
            "regimes": {str(k): asdict(v) for k, v in sorted(self.regimes.items())},
            "noise": asdict(self.noise),
            "snr_db": self.snr_db,
            "sample_rate": self.sample_rate,
            "level_sigma": self.level_sigma,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CorpusConfig":
        scripts = [
            ProcessScript(tuple(Layer(**l) for l in s["layers"]), s.get("name", "build")) for s in d["scripts"]
        ]
        regimes = RegimeModel.defaults()
        for k, v in d.get("regimes", {}).items():
            v = dict(v)
            v["bands"] = tuple(Band(**b) for b in v["bands"])
            regimes[int(k)] = RegimeModel(**v)
        noise = NoiseModel(**d["noise"]) if "noise" in d else NoiseModel()
        return cls(scripts, regimes, noise, float(d.get("snr_db", 5.0)), int(d.get("sample_rate", DEFAULT_SAMPLE_RATE)),
                   float(d.get("level_sigma", 0.0)))

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def expected_counts(self) -> dict[int, int]:
        counts = {0: 0, 1: 0, 2: 0}
        for s in self.scripts:
            for layer in s.layers:
                counts[layer.label] += int(round(layer.duration / SEGMENT_SECONDS))
        return counts


def default_corpus_config(n_files: int = 5, snr_db: float = 5.0) -> CorpusConfig:
    """1300 segments split 650 / 350 / 300 across five builds.

    Every build progresses defect-free, then cracks, then keyhole pores, with
    5 s layers and 1 s noise-only dwell between layers.
    """
    per_file = [0] * 13 + [1] * 7 + [2] * 6
    scripts = [ProcessScript.wall(per_file, name=f"build{i:02d}") for i in range(n_files)]
    return CorpusConfig(scripts, snr_db=snr_db)


@dataclass
class ManifestSegment:
    index: int
    start_ms: int
    end_ms: int
    label: int
    position: Vec3
    straddles: bool = False

    @property
    def start(self) -> float:
        return self.start_ms / 1000.0

    @property
    def end(self) -> float:
        return self.end_ms / 1000.0


@dataclass
class ManifestFile:
    wav: str
    positions: str
    sample_rate: int
    n_samples: int
    segments: list[ManifestSegment]
    dwell: list[tuple[int, int]] = field(default_factory=list)  # (start_ms, end_ms) of noise-only segments
    layers: list[dict] = field(default_factory=list)


@dataclass
class DatasetManifest:
    files: list[ManifestFile]
    seed: int
    config_hash: str
    config: dict = field(default_factory=dict)
    root: Path | None = None

    def counts(self) -> dict[int, int]:
        out = {0: 0, 1: 0, 2: 0}
        for f in self.files:
            for s in f.segments:
                out[s.label] += 1
        return out

    def __len__(self) -> int:
        return sum(len(f.segments) for f in self.files)

    def path(self, rel: str) -> Path:
        return (self.root or Path(".")) / rel

    def to_dict(self) -> dict:
        return {
            "format": MANIFEST_FORMAT,
            "version": MANIFEST_VERSION,
            "seed": self.seed,
            "config_hash": self.config_hash,
            "segment_seconds": SEGMENT_SECONDS,
            "counts": {str(k): v for k, v in self.counts().items()},
            "config": self.config,
            "files": [
                {
                    "wav": f.wav,
                    "positions": f.positions,
                    "sample_rate": f.sample_rate,
                    "n_samples": f.n_samples,
                    "segments": [asdict(s) for s in f.segments],
                    "dwell": [list(d) for d in f.dwell],
                    "layers": f.layers,
                }
                for f in self.files
            ],
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "DatasetManifest":
        path = Path(path)
        try:
            d = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise SynthError(f"cannot read manifest {path}: {exc}") from exc
        if d.get("format") != MANIFEST_FORMAT:
            raise SynthError(f"{path} is not a corpus manifest")
        if d.get("version") != MANIFEST_VERSION:
            raise SynthError(f"unsupported manifest version {d.get('version')}")
        files = []
        for f in d["files"]:
            segs = [
                ManifestSegment(s["index"], s["start_ms"], s["end_ms"], s["label"], tuple(s["position"]), s["straddles"])
                for s in f["segments"]
            ]
            files.append(
                ManifestFile(f["wav"], f["positions"], f["sample_rate"], f["n_samples"], segs,
                             [tuple(x) for x in f["dwell"]], f["layers"])
            )
        return cls(files, d["seed"], d["config_hash"], d.get("config", {}), path.parent)


def write_positions(path: str | Path, t: np.ndarray, xyz: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "y", "z"])
        for ti, p in zip(t, xyz):
            w.writerow([f"{ti:.6f}", f"{p[0]:.6f}", f"{p[1]:.6f}", f"{p[2]:.6f}"])


def render_script(script: ProcessScript, cfg: CorpusConfig, seed_seq: np.random.SeedSequence) -> tuple[AudioClip, AudioClip]:
    """(mixture, clean signal) for one build.

    Every regime renders at unit steady power, so the SNR is measured against
    that steady emission and one noise gain serves the whole build, dwell
    included. Crack bursts therefore raise the local SNR rather than the noise.
    """
    sr = cfg.sample_rate
    noise_seq, level_seq, *layer_seqs = seed_seq.spawn(2 + len(script.layers))
    levels = np.exp(cfg.level_sigma * np.random.default_rng(level_seq).standard_normal(len(script.layers)))
    total = sum(_n_samples(l.duration, sr) + int(round(l.dwell * sr)) for l in script.layers)
    noise = synth_noise(cfg.noise, total / sr, sr, noise_seq).samples
    pn = float(np.mean(noise * noise))
    g = 0.0 if pn == 0 else math.sqrt(1.0 / (pn * 10.0 ** (cfg.snr_db / 10.0)))
    clean = np.zeros(total)
    pos = 0
    for layer, seq, level in zip(script.layers, layer_seqs, levels):
        sig = level * synth_regime(cfg.regimes[layer.label], layer.duration, sr, seq).samples
        clean[pos : pos + sig.shape[0]] = sig
        pos += sig.shape[0] + int(round(layer.dwell * sr))
    return AudioClip(clean + g * noise, sr), AudioClip(clean, sr)


def label_segments(script: ProcessScript, n_samples: int, sample_rate: int):
    """Split a build into 500 ms segments labeled by the interval holding each midpoint.

    Returns (labeled segments, dwell segments as (start_ms, end_ms)).
    """
    seg = int(round(SEGMENT_SECONDS * sample_rate))
    bounds = script.timeline()
    labeled, dwell = [], []
    for k in range(n_samples // seg):
        a, b = k * seg / sample_rate, (k + 1) * seg / sample_rate
        mid = 0.5 * (a + b)
        label = None
        straddles = False
        for start, end, lab, _ in bounds:
            if start <= mid < end:
                label = lab
                straddles = a < start - 1e-9 or b > end + 1e-9
                break
        start_ms, end_ms = int(round(a * 1000)), int(round(b * 1000))
        if label is None:
            dwell.append((start_ms, end_ms))
        else:
            xyz = tuple(float(v) for v in script.position(mid)[0])
            labeled.append(ManifestSegment(k, start_ms, end_ms, int(label), xyz, straddles))
    return labeled, dwell


def generate_corpus(cfg: CorpusConfig, seed: int, out_dir: str | Path, save_clean: bool = False) -> DatasetManifest:
    """Render every build to WAV with a 30 Hz position CSV and write ``manifest.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sr = cfg.sample_rate
    files = []
    for script, seq in zip(cfg.scripts, np.random.SeedSequence(seed).spawn(len(cfg.scripts))):
        mixture, clean = render_script(script, cfg, seq)
        peak = float(np.max(np.abs(mixture.samples)))
        scale = 0.5 / peak if peak > 0 else 1.0
        wav = f"{script.name}.wav"
        try:
            save_wav(mixture.with_samples(mixture.samples * scale), out / wav)
            if save_clean:
                save_wav(clean.with_samples(clean.samples * scale), out / f"{script.name}.clean.wav")
            t = np.arange(int(math.floor(len(mixture) / sr * POSITION_RATE)) + 1) / POSITION_RATE
            write_positions(out / f"{script.name}.positions.csv", t, script.position(t))
        except OSError as exc:
            raise SynthError(f"cannot write corpus files in {out}: {exc}") from exc
        labeled, dwell = label_segments(script, len(mixture), sr)
        layers = [
            {"label": lab, "start_ms": int(round(a * 1000)), "end_ms": int(round(b * 1000))}
            for a, b, lab, _ in script.timeline()
            if lab is not None
        ]
        files.append(ManifestFile(wav, f"{script.name}.positions.csv", sr, len(mixture), labeled, dwell, layers))
    manifest = DatasetManifest(files, int(seed), cfg.config_hash(), cfg.to_dict(), out)
    manifest.save(out / "manifest.json")
    return manifest


def read_positions(path: str | Path) -> np.ndarray:
    """(n, 4) array of t, x, y, z from a position CSV."""
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise AudioError(f"cannot read positions {path}: {exc}") from exc
    if data.shape[1] != 4:
        raise AudioError(f"{path}: expected columns t,x,y,z")
    return data
