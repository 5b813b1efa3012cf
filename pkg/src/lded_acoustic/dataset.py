"""Turn a corpus manifest into model inputs at a chosen denoising stage."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .analysis import FeatureTable
from .denoise import STAGE_NAMES, DenoiseConfig
from .features import STAT_NAMES, segment_feature_vector
from .mfcc import mfcc_segment_tensor
from .signal_core import SEGMENT_SECONDS, AudioClip, Segment, load_wav
from .synth import DatasetManifest


@dataclass
class LabeledSegments:
    segments: list[Segment]
    labels: np.ndarray
    meta: list[dict] = field(default_factory=list)


def stage_clip(clip: AudioClip, stage: str, cfg: DenoiseConfig | None = None) -> AudioClip:
    """The clip after the named stage of the denoising chain."""
    if stage not in STAGE_NAMES:
        raise ValueError(f"unknown stage {stage!r}; choose from {STAGE_NAMES}")
    if stage == "raw":
        return clip
    return (cfg or DenoiseConfig()).run(clip).stage(stage)


def manifest_segments(manifest: DatasetManifest, stage: str = "dn", cfg: DenoiseConfig | None = None) -> LabeledSegments:
    """Labeled 500 ms segments of every file, cut after processing the whole file."""
    segs, labels, meta = [], [], []
    for f in manifest.files:
        clip = stage_clip(load_wav(manifest.path(f.wav)), stage, cfg)
        n = int(round(SEGMENT_SECONDS * clip.sample_rate))
        for s in f.segments:
            a = s.index * n
            segs.append(Segment(clip.slice(a, a + n), s.index, a / clip.sample_rate, SEGMENT_SECONDS))
            labels.append(s.label)
            meta.append({"file": f.wav, "index": s.index, "start_ms": s.start_ms, "end_ms": s.end_ms})
    return LabeledSegments(segs, np.array(labels, dtype=np.int64), meta)


def mfcc_tensors(data: LabeledSegments) -> np.ndarray:
    """(n, 20, 85) stack of normalised MFCC matrices."""
    return np.stack([mfcc_segment_tensor(s) for s in data.segments])


def feature_table(data: LabeledSegments, names=STAT_NAMES) -> FeatureTable:
    rows = [segment_feature_vector(s).as_array(names) for s in data.segments]
    return FeatureTable(list(names), np.array(rows), data.labels, data.meta)
