"""In-process publish/subscribe monitoring pipeline.

Capture -> denoise -> segment -> predict -> register, each node on its own
thread, exchanging immutable messages over a :class:`Bus`. Offline mode uses
blocking queues and is lossless; live mode paces capture at the block rate and
bounds queues with drop-oldest, counting every drop.
"""

from __future__ import annotations

import enum
import json
import math
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from scipy import ndimage, signal

from .denoise import DenoiseConfig, FilterMode, soft_masks
from .features import segment_feature_vector
from .mfcc import mfcc_segment_tensor
from .signal_core import SEGMENT_SECONDS, WSUM_FLOOR, AudioClip, FramingConfig, Segment, load_wav, segment_clip

BLOCK_RATE = 30
CAPTURE_TIMEOUT = 60.0

# topic names
T_AUDIO = "audio/raw"
T_DENOISED = "audio/denoised"
T_SEGMENT = "audio/segment"
T_PREDICTION = "prediction"
T_POSITION = "position"
T_REGISTERED = "registered"


class BusError(RuntimeError):
    pass


class QueueClosed(BusError):
    pass


class PipelineError(RuntimeError):
    """A node failed; the message names it."""


class Overflow(str, enum.Enum):
    BLOCK = "block"
    DROP_OLDEST = "drop_oldest"


@dataclass(frozen=True)
class Message:
    topic: str
    timestamp: float
    payload: Any
    seq: int = 0


class Subscription:
    """Bounded FIFO owned by one subscriber of one topic."""

    def __init__(self, topic: str, capacity: int | None = None, policy: Overflow = Overflow.BLOCK):
        if capacity is not None and capacity < 1:
            raise ValueError("capacity must be at least 1")
        self.topic = topic
        self.capacity = capacity
        self.policy = Overflow(policy)
        self.drops = 0
        self.received = 0
        self._queue: deque[Message] = deque()
        self._cond = threading.Condition()
        self._closed = False

    def put(self, msg: Message) -> None:
        with self._cond:
            if self._closed:
                raise QueueClosed(f"subscription on {self.topic!r} is closed")
            if self.capacity is not None and len(self._queue) >= self.capacity:
                if self.policy is Overflow.DROP_OLDEST:
                    self._queue.popleft()
                    self.drops += 1
                else:
                    while len(self._queue) >= self.capacity and not self._closed:
                        self._cond.wait()
                    if self._closed:
                        raise QueueClosed(f"subscription on {self.topic!r} closed while blocked")
            self._queue.append(msg)
            self.received += 1
            self._cond.notify_all()

    def get(self, timeout: float | None = None) -> Message | None:
        """Next message, or ``None`` once the queue is closed and empty."""
        with self._cond:
            deadline = None if timeout is None else time.monotonic() + timeout
            while not self._queue and not self._closed:
                remaining = None if deadline is None else deadline - time.monotonic()
                if remaining is not None and remaining <= 0:
                    raise TimeoutError(f"no message on {self.topic!r} within {timeout} s")
                self._cond.wait(remaining)
            if not self._queue:
                return None
            msg = self._queue.popleft()
            self._cond.notify_all()
            return msg

    def __iter__(self):
        while (msg := self.get()) is not None:
            yield msg

    def close(self, drain: bool = True) -> None:
        with self._cond:
            self._closed = True
            if not drain:
                self._queue.clear()
            self._cond.notify_all()

    def __len__(self) -> int:
        with self._cond:
            return len(self._queue)


class Bus:
    """Topic registry with fan-out to per-subscriber queues.

    Publishing to a topic is serialised, so every subscriber sees the same
    order, and timestamps must not decrease within a topic.
    """

    def __init__(self):
        self._topics: dict[str, list[Subscription]] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._last: dict[str, float] = {}
        self._seq: dict[str, int] = {}
        self._closed: set[str] = set()
        self._registry = threading.Lock()

    def register(self, topic: str) -> None:
        with self._registry:
            if topic not in self._topics:
                self._topics[topic] = []
                self._locks[topic] = threading.Lock()
                self._last[topic] = -math.inf
                self._seq[topic] = 0

    @property
    def topics(self) -> list[str]:
        return list(self._topics)

    def _check(self, topic: str) -> None:
        if topic not in self._topics:
            raise BusError(f"unknown topic {topic!r}")

    def subscribe(self, topic: str, capacity: int | None = None, policy: Overflow = Overflow.BLOCK) -> Subscription:
        self._check(topic)
        sub = Subscription(topic, capacity, policy)
        with self._locks[topic]:
            if topic in self._closed:
                sub.close()
            self._topics[topic].append(sub)
        return sub

    def publish(self, topic: str, timestamp: float, payload: Any) -> Message:
        self._check(topic)
        with self._locks[topic]:
            if topic in self._closed:
                raise QueueClosed(f"topic {topic!r} is closed")
            if timestamp < self._last[topic]:
                raise BusError(f"timestamp {timestamp} on {topic!r} precedes {self._last[topic]}")
            self._last[topic] = timestamp
            msg = Message(topic, float(timestamp), payload, self._seq[topic])
            self._seq[topic] += 1
            for sub in self._topics[topic]:
                sub.put(msg)
        return msg

    def close(self, topic: str, drain: bool = True) -> None:
        self._check(topic)
        self._closed.add(topic)
        for sub in list(self._topics[topic]):
            sub.close(drain)

    def abort(self) -> None:
        """Close every topic and discard queued messages."""
        for topic in self.topics:
            self.close(topic, drain=False)

    def drops(self) -> dict[str, int]:
        out = {}
        for topic, subs in self._topics.items():
            for i, sub in enumerate(subs):
                out[f"{topic}#{i}"] = sub.drops
        return out


# ------------------------------------------------------------------ payloads


@dataclass(frozen=True)
class AudioBlock:
    index: int
    start_sample: int
    samples: np.ndarray
    n_valid: int
    sample_rate: int
    wall: float = 0.0

    @property
    def padded(self) -> bool:
        return self.n_valid < self.samples.shape[0]


@dataclass(frozen=True)
class DenoisedBlock:
    start_sample: int
    samples: np.ndarray
    sample_rate: int
    captured: tuple[tuple[int, float], ...] = ()  # (block index, capture wall time) consumed


@dataclass(frozen=True)
class SegmentMessage:
    segment: Segment
    completed_wall: float


@dataclass(frozen=True)
class PositionSample:
    t: float
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in (self.t, self.x, self.y, self.z)):
            raise ValueError("position sample must be finite")


@dataclass(frozen=True)
class Prediction:
    segment: int
    start: float
    end: float
    label: int
    proba: tuple[float, ...]
    latency: float | None = None


@dataclass(frozen=True)
class RegisteredPrediction:
    segment: int
    start: float
    end: float
    position: tuple[float, float, float]
    label: int
    proba: tuple[float, ...]
    clamped: bool = False

    def to_record(self) -> dict:
        return {
            "segment": self.segment,
            "start": self.start,
            "end": self.end,
            "position": list(self.position),
            "class": self.label,
            "proba": list(self.proba),
            "clamped": self.clamped,
        }


# ------------------------------------------------------------------ streaming DSP


class _OverlapAdd:
    """Incremental twin of :func:`overlap_add`, adding frames in the same order."""

    def __init__(self, cfg: FramingConfig):
        self.cfg = cfg
        self.w = cfg.window_array()
        self.w2 = self.w**2
        self.acc = np.zeros(0)
        self.wsum = np.zeros(0)
        self.base = 0  # absolute index of acc[0]
        self.n_frames = 0

    def add(self, frames: np.ndarray) -> None:
        hop, size = self.cfg.hop, self.cfg.frame_size
        for frame in frames:
            a = self.n_frames * hop - self.base
            if a + size > self.acc.shape[0]:
                grow = a + size - self.acc.shape[0]
                self.acc = np.concatenate([self.acc, np.zeros(grow)])
                self.wsum = np.concatenate([self.wsum, np.zeros(grow)])
            self.acc[a : a + size] += frame * self.w
            self.wsum[a : a + size] += self.w2
            self.n_frames += 1

    def _emit(self, upto: int) -> np.ndarray:
        k = upto - self.base
        out = np.zeros(k)
        m = min(k, self.acc.shape[0])
        out[:m] = self.acc[:m] / np.maximum(self.wsum[:m], WSUM_FLOOR)
        self.acc, self.wsum = self.acc[m:], self.wsum[m:]
        self.base = upto
        return out

    def pop_final(self) -> np.ndarray:
        """Samples no later frame can touch."""
        return self._emit(self.n_frames * self.cfg.hop)

    def finish(self, length: int) -> np.ndarray:
        return self._emit(length)


class _Framer:
    """Cuts an incoming sample stream into analysis frames (no centering)."""

    def __init__(self, cfg: FramingConfig):
        self.cfg = cfg
        self.buf = np.zeros(0)
        self.base = 0
        self.next_frame = 0
        self.total = 0

    def push(self, x: np.ndarray) -> np.ndarray:
        self.buf = np.concatenate([self.buf, x])
        self.total += x.shape[0]
        hop, size = self.cfg.hop, self.cfg.frame_size
        count = 0
        while (self.next_frame + count) * hop + size <= self.total:
            count += 1
        if count == 0:
            return np.zeros((0, size))
        a = self.next_frame * hop - self.base
        frames = np.stack([self.buf[a + i * hop : a + i * hop + size] for i in range(count)])
        self.next_frame += count
        drop = self.next_frame * hop - self.base
        self.buf = self.buf[drop:]
        self.base += drop
        return frames


class _EqStage:
    def __init__(self, gains: np.ndarray, cfg: FramingConfig):
        self.gains = gains
        self.cfg = cfg
        self.window = cfg.window_array()
        self.framer = _Framer(cfg)
        self.ola = _OverlapAdd(cfg)

    def push(self, x: np.ndarray) -> np.ndarray:
        frames = self.framer.push(x)
        if frames.shape[0]:
            spec = np.fft.rfft(frames * self.window, axis=1) * self.gains[None, :]
            self.ola.add(np.fft.irfft(spec, n=self.cfg.frame_size, axis=1))
        return self.ola.pop_final()

    def close(self) -> np.ndarray:
        return self.ola.finish(self.framer.total)


class _BandpassStage:
    def __init__(self, sos: np.ndarray):
        self.sos = sos
        self.zi = np.zeros((sos.shape[0], 2))

    def push(self, x: np.ndarray) -> np.ndarray:
        if x.shape[0] == 0:
            return x
        y, self.zi = signal.sosfilt(self.sos, x, zi=self.zi)
        return y

    def close(self) -> np.ndarray:
        return np.zeros(0)


class _HpssStage:
    """Percussive HPSS with ``kernel_time // 2`` frames of lookahead.

    Time medians replicate the first frame before the stream start and the last
    frame after close, matching the offline edge mode.
    """

    def __init__(self, cfg, framing: FramingConfig):
        self.cfg = cfg
        self.framing = framing
        self.window = framing.window_array()
        self.half = cfg.kernel_time // 2
        self.framer = _Framer(framing)
        self.ola = _OverlapAdd(framing)
        self.spec: list[np.ndarray] = []  # complex frames not yet released
        self.mag: list[np.ndarray] = []  # magnitudes, kept for the time window
        self.first = 0  # frame index of spec[0]
        self.mag_first = 0
        self.done = 0  # frames emitted

    def _emit(self, t: int, n_total: int | None) -> None:
        half = self.half
        last = (self.mag_first + len(self.mag) - 1) if n_total is None else n_total - 1
        idx = [min(max(j, 0), last) - self.mag_first for j in range(t - half, t + half + 1)]
        col = self.mag[t - self.mag_first]
        harm = np.median(np.stack([self.mag[i] for i in idx], axis=1), axis=1)
        perc = ndimage.median_filter(col, size=self.cfg.kernel_freq, mode="nearest")
        _, mask_p = soft_masks(harm, perc, self.cfg.power)
        frame = np.fft.irfft(self.spec[t - self.first] * mask_p, n=self.framing.frame_size)
        self.ola.add(frame[None, :])
        self.done = t + 1

    def _trim(self) -> None:
        keep_from = max(self.done - self.half, 0)
        drop = keep_from - self.mag_first
        if drop > 0:
            del self.mag[:drop]
            self.mag_first = keep_from
        drop = self.done - self.first
        if drop > 0:
            del self.spec[:drop]
            self.first = self.done

    def push(self, x: np.ndarray) -> np.ndarray:
        frames = self.framer.push(x)
        if frames.shape[0]:
            spec = np.fft.rfft(frames * self.window, axis=1)
            for row in spec:
                self.spec.append(row)
                self.mag.append(np.abs(row))
        available = self.framer.next_frame
        while self.done + self.half < available:
            self._emit(self.done, None)
        self._trim()
        return self.ola.pop_final()

    def close(self) -> np.ndarray:
        n_total = self.framer.next_frame
        while self.done < n_total:
            self._emit(self.done, n_total)
        self._trim()
        return self.ola.finish(self.framer.total)


class StreamingDenoiser:
    """Block-wise equalize -> causal bandpass -> percussive HPSS.

    The concatenated output equals the offline chain on the same input
    exactly (same frames, filter recurrence and summation order), delayed by
    one frame for the equalizer and ``kernel_time // 2`` frames of HPSS lookahead.
    """

    def __init__(self, cfg: DenoiseConfig | None = None, sample_rate: int = 44100):
        cfg = cfg or DenoiseConfig()
        if cfg.bandpass.mode is not FilterMode.CAUSAL:
            raise ValueError("streaming needs the causal bandpass; zero-phase filtering is offline only")
        framing = cfg.hpss.framing
        self.cfg = cfg
        self.sample_rate = sample_rate
        self._stages = [
            _EqStage(cfg.equalizer.bin_gains(sample_rate, framing.frame_size), framing),
            _BandpassStage(cfg.bandpass.sos(sample_rate)),
            _HpssStage(cfg.hpss, framing),
        ]
        self.n_in = 0
        self.n_out = 0

    @property
    def latency_samples(self) -> int:
        f = self.cfg.hpss.framing
        return 2 * f.frame_size + self.cfg.hpss.lookahead_frames * f.hop

    def push(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        self.n_in += x.shape[0]
        for stage in self._stages:
            x = stage.push(x)
        self.n_out += x.shape[0]
        return x

    def close(self) -> np.ndarray:
        out = np.zeros(0)
        for stage in self._stages:
            out = stage.close() if out.shape[0] == 0 else np.concatenate([stage.push(out), stage.close()])
        self.n_out += out.shape[0]
        return out


def stream_bandpass(x: np.ndarray, sos: np.ndarray, block: int) -> np.ndarray:
    """Causal bandpass applied block by block with carried state."""
    stage = _BandpassStage(sos)
    return np.concatenate([stage.push(x[i : i + block]) for i in range(0, x.shape[0], block)])


# ------------------------------------------------------------------ shared helpers


def model_input(model, segment: Segment):
    """The representation a model consumes: an MFCC tensor or a feature row."""
    if hasattr(model, "arch"):
        return mfcc_segment_tensor(segment)[None]
    if hasattr(model, "feature_names"):
        return model.rows_from_vectors([segment_feature_vector(segment)])
    raise TypeError(f"cannot build inputs for model of type {type(model).__name__}")


def predict_segment(model, segment: Segment) -> tuple[int, tuple[float, ...]]:
    proba = np.asarray(model.predict_proba(model_input(model, segment)), dtype=np.float64)[0]
    proba = proba / proba.sum()
    return int(np.argmax(proba)), tuple(float(p) for p in proba)


def interpolate_position(positions: np.ndarray, t: float) -> tuple[tuple[float, float, float], bool]:
    """Linear interpolation in a (n, 4) t,x,y,z table; clamps outside it and flags that."""
    if positions.shape[0] == 0:
        raise ValueError("empty position stream")
    ts = positions[:, 0]
    clamped = bool(t < ts[0] or t > ts[-1])
    xyz = tuple(float(np.interp(t, ts, positions[:, c])) for c in (1, 2, 3))
    return xyz, clamped


def batch_predictions(clip: AudioClip, positions: np.ndarray, model, cfg: DenoiseConfig | None = None) -> list[RegisteredPrediction]:
    """The non-streaming oracle: denoise the whole clip, segment, predict, register."""
    cfg = cfg or DenoiseConfig()
    denoised = cfg.run(clip).denoised
    out = []
    for seg in segment_clip(denoised):
        label, proba = predict_segment(model, seg)
        start = seg.index * SEGMENT_SECONDS
        end = start + SEGMENT_SECONDS
        xyz, clamped = interpolate_position(positions, 0.5 * (start + end))
        out.append(RegisteredPrediction(seg.index, start, end, xyz, label, proba, clamped))
    return out


# ------------------------------------------------------------------ nodes


class Node(threading.Thread):
    def __init__(self, name: str, bus: Bus):
        super().__init__(name=name, daemon=True)
        self.bus = bus
        self.error: BaseException | None = None
        self.notices: list[str] = []

    def run(self) -> None:
        try:
            self.work()
        except QueueClosed:
            pass
        except BaseException as exc:  # reported by the pipeline
            self.error = exc
            self.bus.abort()

    def work(self) -> None:  # pragma: no cover - abstract
        raise NotImplementedError


class CaptureNode(Node):
    """Replays a clip as fixed-size blocks; the last block is zero-padded and flagged."""

    def __init__(self, bus: Bus, clip: AudioClip, block_rate: int = BLOCK_RATE, live: bool = False, topic: str = T_AUDIO):
        super().__init__("capture", bus)
        self.clip = clip
        self.block = clip.sample_rate // block_rate
        if clip.sample_rate % block_rate:
            self.notices.append(f"sample rate {clip.sample_rate} is not divisible by {block_rate}; blocks hold {self.block} samples")
        self.live = live
        self.topic = topic
        self.blocks = 0

    def work(self) -> None:
        x = self.clip.samples
        n = x.shape[0]
        sr = self.clip.sample_rate
        t0 = time.monotonic()
        for k, a in enumerate(range(0, n, self.block)):
            chunk = x[a : a + self.block]
            valid = chunk.shape[0]
            if valid < self.block:
                chunk = np.concatenate([chunk, np.zeros(self.block - valid)])
                self.notices.append(f"final block {k} zero-padded from {valid} samples")
            chunk = chunk.copy()
            chunk.setflags(write=False)
            if self.live:
                delay = t0 + (a + self.block) / sr - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
            payload = AudioBlock(k, a, chunk, valid, sr, time.monotonic())
            self.bus.publish(self.topic, self.clip.origin + a / sr, payload)
            self.blocks += 1
        self.bus.close(self.topic)


class PositionNode(Node):
    def __init__(self, bus: Bus, positions: np.ndarray, live: bool = False):
        super().__init__("position", bus)
        self.positions = positions
        self.live = live

    def work(self) -> None:
        t0 = time.monotonic()
        first = self.positions[0, 0] if self.positions.shape[0] else 0.0
        for t, x, y, z in self.positions:
            if self.live:
                delay = t0 + (t - first) - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
            self.bus.publish(T_POSITION, float(t), PositionSample(float(t), float(x), float(y), float(z)))
        self.bus.close(T_POSITION)


class DenoiseNode(Node):
    def __init__(self, bus: Bus, inbox: Subscription, cfg: DenoiseConfig | None, sample_rate: int):
        super().__init__("denoise", bus)
        self.inbox = inbox
        self.denoiser = StreamingDenoiser(cfg, sample_rate)
        self.sample_rate = sample_rate

    def _publish(self, y: np.ndarray, captured) -> None:
        if y.shape[0] == 0 and not captured:
            return
        start = self.denoiser.n_out - y.shape[0]
        y = y.copy()
        y.setflags(write=False)
        self.bus.publish(T_DENOISED, start / self.sample_rate, DenoisedBlock(start, y, self.sample_rate, tuple(captured)))

    def work(self) -> None:
        captured = []
        for msg in self.inbox:
            block: AudioBlock = msg.payload
            if block.sample_rate != self.sample_rate:
                raise ValueError(f"block at {block.sample_rate} Hz, denoiser configured for {self.sample_rate} Hz")
            captured.append((block.index, block.wall))
            y = self.denoiser.push(block.samples[: block.n_valid])
            if y.shape[0]:
                self._publish(y, captured)
                captured = []
        self._publish(self.denoiser.close(), captured)
        self.bus.close(T_DENOISED)


class SegmentNode(Node):
    """Accumulates denoised audio into 500 ms segments."""

    def __init__(self, bus: Bus, inbox: Subscription, sample_rate: int, block: int, origin: float = 0.0):
        super().__init__("segment", bus)
        self.inbox = inbox
        self.sample_rate = sample_rate
        self.size = int(round(SEGMENT_SECONDS * sample_rate))
        self.block = block
        self.origin = origin
        self.count = 0

    def work(self) -> None:
        buf = np.zeros(0)
        walls: dict[int, float] = {}
        for msg in self.inbox:
            d: DenoisedBlock = msg.payload
            walls.update(d.captured)
            buf = np.concatenate([buf, d.samples])
            while buf.shape[0] >= self.size:
                k = self.count
                clip = AudioClip(buf[: self.size], self.sample_rate, self.origin + k * SEGMENT_SECONDS)
                last_block = ((k + 1) * self.size - 1) // self.block
                seg = Segment(clip, k, clip.origin, SEGMENT_SECONDS)
                self.bus.publish(T_SEGMENT, clip.origin, SegmentMessage(seg, walls.get(last_block, math.nan)))
                buf = buf[self.size :]
                self.count += 1
        if buf.shape[0]:
            self.notices.append(f"dropped a partial tail of {buf.shape[0]} samples")
        self.bus.close(T_SEGMENT)


class PredictorNode(Node):
    def __init__(self, bus: Bus, inbox: Subscription, model):
        super().__init__("predictor", bus)
        self.inbox = inbox
        self.model = model
        self.latencies: list[float] = []

    def work(self) -> None:
        for msg in self.inbox:
            sm: SegmentMessage = msg.payload
            seg = sm.segment
            label, proba = predict_segment(self.model, seg)
            start = seg.index * SEGMENT_SECONDS
            latency = time.monotonic() - sm.completed_wall if math.isfinite(sm.completed_wall) else None
            if latency is not None:
                self.latencies.append(latency)
            self.bus.publish(
                T_PREDICTION, msg.timestamp, Prediction(seg.index, start, start + SEGMENT_SECONDS, label, proba, latency)
            )
        self.bus.close(T_PREDICTION)


class RegisterNode(Node):
    """Pairs each prediction with the scan position at its segment midpoint."""

    def __init__(self, bus: Bus, predictions: Subscription, positions: Subscription):
        super().__init__("register", bus)
        self.predictions = predictions
        self.positions = positions
        self.records: list[RegisteredPrediction] = []
        self._pos: list[tuple[float, float, float, float]] = []
        self._pos_done = False
        self._cond = threading.Condition()

    def _collect(self) -> None:
        try:
            for msg in self.positions:
                p: PositionSample = msg.payload
                with self._cond:
                    self._pos.append((p.t, p.x, p.y, p.z))
                    self._cond.notify_all()
        finally:
            with self._cond:
                self._pos_done = True
                self._cond.notify_all()

    def work(self) -> None:
        collector = threading.Thread(target=self._collect, name="register-positions", daemon=True)
        collector.start()
        for msg in self.predictions:
            pred: Prediction = msg.payload
            mid = 0.5 * (pred.start + pred.end)
            with self._cond:
                while not self._pos_done and (not self._pos or self._pos[-1][0] < mid):
                    self._cond.wait()
                table = np.array(self._pos).reshape(-1, 4)
            if table.shape[0] == 0:
                raise ValueError("empty position stream")
            xyz, clamped = interpolate_position(table, mid)
            rec = RegisteredPrediction(pred.segment, pred.start, pred.end, xyz, pred.label, pred.proba, clamped)
            self.records.append(rec)
            self.bus.publish(T_REGISTERED, msg.timestamp, rec)
        collector.join()
        self.bus.close(T_REGISTERED)


# ------------------------------------------------------------------ pipeline


@dataclass
class RunReport:
    mode: str
    records: list[RegisteredPrediction]
    blocks: int
    segments: int
    drops: dict[str, int]
    latency: dict[str, float] | None
    notices: list[str] = field(default_factory=list)
    latency_samples: int = 0
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "blocks": self.blocks,
            "segments": self.segments,
            "predictions": len(self.records),
            "clamped": sum(r.clamped for r in self.records),
            "drops": self.drops,
            "total_drops": sum(self.drops.values()),
            "latency": self.latency,
            "denoise_latency_seconds": self.latency_samples / 44100.0,
            "notices": self.notices,
            "meta": self.meta,
        }

    def write(self, out_dir: str | Path, stem: str = "predictions") -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        log = out / f"{stem}.jsonl"
        write_jsonl(self.records, log)
        report = out / f"{stem}.report.json"
        report.write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n")
        return log, report


def write_jsonl(records: list[RegisteredPrediction], path: str | Path) -> None:
    with open(path, "w") as fh:
        for r in records:
            fh.write(json.dumps(r.to_record(), sort_keys=True) + "\n")


def _percentiles(values: list[float]) -> dict[str, float] | None:
    if not values:
        return None
    v = np.asarray(values)
    return {
        "count": int(v.shape[0]),
        "p50": float(np.percentile(v, 50)),
        "p90": float(np.percentile(v, 90)),
        "p99": float(np.percentile(v, 99)),
        "max": float(v.max()),
        "mean": float(v.mean()),
    }


def run_pipeline(
    clip: AudioClip | str | Path,
    positions: np.ndarray,
    model,
    mode: str = "offline",
    cfg: DenoiseConfig | None = None,
    capacity: int | None = None,
    timeout: float | None = None,
) -> RunReport:
    """Run the node graph to completion.

    Offline: blocking queues (default capacity 64), capture as fast as the
    pipeline drains. Live: capture paced at 30 blocks per second and
    drop-oldest queues (default capacity 8).
    """
    if mode not in ("offline", "live"):
        raise ValueError("mode must be 'offline' or 'live'")
    if not isinstance(clip, AudioClip):
        clip = load_wav(clip)
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 4)
    if positions.shape[0] == 0:
        raise ValueError("empty position stream")
    live = mode == "live"
    policy = Overflow.DROP_OLDEST if live else Overflow.BLOCK
    capacity = capacity or (8 if live else 64)
    sr = clip.sample_rate

    bus = Bus()
    for topic in (T_AUDIO, T_DENOISED, T_SEGMENT, T_PREDICTION, T_POSITION, T_REGISTERED):
        bus.register(topic)
    capture = CaptureNode(bus, clip, BLOCK_RATE, live)
    nodes = [
        DenoiseNode(bus, bus.subscribe(T_AUDIO, capacity, policy), cfg, sr),
        SegmentNode(bus, bus.subscribe(T_DENOISED, capacity, policy), sr, capture.block, clip.origin),
        PredictorNode(bus, bus.subscribe(T_SEGMENT, capacity, policy), model),
        # positions and predictions are small; never drop them
        RegisterNode(bus, bus.subscribe(T_PREDICTION), bus.subscribe(T_POSITION)),
        PositionNode(bus, positions, live),
        capture,
    ]
    for node in nodes:
        node.start()
    deadline = None if timeout is None else time.monotonic() + timeout
    for node in nodes:
        node.join(None if deadline is None else max(0.0, deadline - time.monotonic()))
        if node.is_alive():
            bus.abort()
            raise PipelineError(f"node {node.name!r} did not finish within {timeout} s")
    for node in nodes:
        if node.error is not None:
            raise PipelineError(f"node {node.name!r} failed: {node.error!r}") from node.error
    predictor, register, segmenter, denoiser = nodes[2], nodes[3], nodes[1], nodes[0]
    notices = [f"{n.name}: {msg}" for n in nodes for msg in n.notices]
    return RunReport(
        mode=mode,
        records=register.records,
        blocks=capture.blocks,
        segments=segmenter.count,
        drops=bus.drops(),
        latency=_percentiles(predictor.latencies) if live else None,
        notices=notices,
        latency_samples=denoiser.denoiser.latency_samples,
    )
