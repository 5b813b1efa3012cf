"""Command-line entry point: ``lded-acoustic <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import struct
import sys
import traceback
from pathlib import Path

import numpy as np

from . import analysis
from .dataset import LabeledSegments, feature_table, manifest_segments, mfcc_tensors, stage_clip
from .denoise import STAGE_NAMES, DenoiseConfig, DenoiseConfigError
from .experiment import CNN, CNN_EPOCHS, repeated_runs, train_once
from .features import SELECTED_FEATURES, STAT_NAMES
from .models import TrainingDiverged, load_model, save_model
from .models.classic import ESTIMATORS
from .models.io import ModelFormatError
from .signal_core import AudioClip, AudioError, load_wav, save_wav, segment_clip
from .stream import PipelineError, run_pipeline
from .synth import CorpusConfig, DatasetManifest, SynthError, default_corpus_config, generate_corpus, read_positions

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
MODEL_KINDS = (CNN,) + tuple(ESTIMATORS)
MFCC_MAGIC = b"MFCC"


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def config_hash(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _stamp(args, extra: dict | None = None) -> dict:
    """Settings that define an artifact: every argument except the output directory."""
    settings = {k: v for k, v in vars(args).items() if k not in ("out", "func")}
    settings = {k: (str(v) if isinstance(v, Path) else v) for k, v in settings.items()}
    if extra:
        settings.update(extra)
    return {"config_hash": config_hash(settings), "seed": getattr(args, "seed", None), "command": args.command}


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def _denoise_cfg(args) -> DenoiseConfig:
    path = getattr(args, "denoise_config", None)
    if path is None:
        return DenoiseConfig()
    try:
        return DenoiseConfig.load(path)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read denoise config {path}: {exc}") from exc


# ------------------------------------------------------------------ synth


def cmd_synth(args) -> int:
    if args.config:
        try:
            cfg = CorpusConfig.from_dict(json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
            raise DataError(f"cannot read corpus config {args.config}: {exc}") from exc
    else:
        cfg = default_corpus_config(snr_db=args.snr_db)
    manifest = generate_corpus(cfg, args.seed, _out(args))
    counts = manifest.counts()
    print(f"wrote {len(manifest)} segments in {len(manifest.files)} files "
          f"(counts {counts[0]}/{counts[1]}/{counts[2]}, config {manifest.config_hash}) to {args.out}")
    return EXIT_OK


# ------------------------------------------------------------------ denoise


def cmd_denoise(args) -> int:
    cfg = _denoise_cfg(args)
    clip = load_wav(args.input)
    stages = cfg.run(clip)
    out = _out(args)
    stem = Path(args.input).stem
    for name in STAGE_NAMES:
        save_wav(stages.stage(name), out / f"{stem}.{name}.wav")
    _write_json(out / f"{stem}.denoise.json", {**_stamp(args, {"denoise": cfg.to_dict()}), "denoise": cfg.to_dict(),
                                               "stages": [f"{stem}.{n}.wav" for n in STAGE_NAMES]})
    print(f"wrote {len(STAGE_NAMES)} stage files for {stem} to {out}")
    return EXIT_OK


# ------------------------------------------------------------------ features


def _segments(args, cfg: DenoiseConfig) -> LabeledSegments:
    if args.manifest:
        return manifest_segments(DatasetManifest.load(args.manifest), args.stage, cfg)
    clip = stage_clip(load_wav(args.input), args.stage, cfg)
    segs = segment_clip(clip)
    meta = [{"file": Path(args.input).name, "index": s.index, "start_ms": round(s.start * 1000),
             "end_ms": round((s.start + 0.5) * 1000)} for s in segs]
    return LabeledSegments(segs, np.full(len(segs), -1), meta)


def write_mfcc_bin(path: Path, matrix: np.ndarray) -> None:
    """4-byte magic, two little-endian uint16 dimensions, then float32 row-major data."""
    rows, cols = matrix.shape
    with open(path, "wb") as fh:
        fh.write(MFCC_MAGIC + struct.pack("<HH", rows, cols))
        fh.write(np.ascontiguousarray(matrix, dtype="<f4").tobytes())


def read_mfcc_bin(path: str | Path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 8 or raw[:4] != MFCC_MAGIC:
        raise DataError(f"{path}: not an MFCC tensor file")
    rows, cols = struct.unpack("<HH", raw[4:8])
    if len(raw) != 8 + 4 * rows * cols:
        raise DataError(f"{path}: payload does not match header shape {rows}x{cols}")
    return np.frombuffer(raw[8:], dtype="<f4").reshape(rows, cols).astype(np.float32)


def cmd_features(args) -> int:
    if bool(args.manifest) == bool(args.input):
        raise UsageError("give exactly one of --manifest or --input")
    cfg = _denoise_cfg(args)
    data = _segments(args, cfg)
    table = feature_table(data, STAT_NAMES)
    out = _out(args)
    stamp = _stamp(args, {"denoise": cfg.to_dict()})
    with open(out / "features.csv", "w", newline="") as fh:
        fh.write(f"# config_hash={stamp['config_hash']} seed={stamp['seed']} stage={args.stage}\n")
        w = csv.writer(fh)
        w.writerow(["file", "segment", "start_ms", "end_ms", "label", *STAT_NAMES])
        for m, label, row in zip(data.meta, data.labels, table.X):
            w.writerow([m["file"], m["index"], m["start_ms"], m["end_ms"], int(label), *(repr(float(v)) for v in row)])
    if args.mfcc:
        mf_dir = out / "mfcc"
        mf_dir.mkdir(exist_ok=True)
        tensors = mfcc_tensors(data)
        with open(mf_dir / "index.csv", "w", newline="") as fh:
            fh.write(f"# config_hash={stamp['config_hash']} seed={stamp['seed']} stage={args.stage}\n")
            w = csv.writer(fh)
            w.writerow(["path", "file", "segment", "label"])
            for i, (m, label, t) in enumerate(zip(data.meta, data.labels, tensors)):
                name = f"{Path(m['file']).stem}_{m['index']:05d}"
                if args.mfcc_format == "bin":
                    write_mfcc_bin(mf_dir / f"{name}.bin", t)
                    w.writerow([f"{name}.bin", m["file"], m["index"], int(label)])
                else:
                    np.savetxt(mf_dir / f"{name}.csv", t, delimiter=",", fmt="%.9g")
                    w.writerow([f"{name}.csv", m["file"], m["index"], int(label)])
    print(f"wrote features for {len(data.labels)} segments to {out}")
    return EXIT_OK


def read_feature_csv(path: str | Path) -> analysis.FeatureTable:
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path} is empty")
    header, body = rows[0], rows[1:]
    try:
        first = header.index("label") + 1
        names = header[first:]
        X = np.array([[float(v) for v in r[first:]] for r in body])
        labels = np.array([int(r[first - 1]) for r in body])
    except (ValueError, IndexError) as exc:
        raise DataError(f"{path}: malformed feature table ({exc})") from exc
    if np.any(labels < 0):
        raise DataError(f"{path}: rows without labels cannot be analysed")
    meta = [{"file": r[0], "index": int(r[1])} for r in body]
    return analysis.FeatureTable(names, X.reshape(len(body), len(names)), labels, meta)


# ------------------------------------------------------------------ analyze


def cmd_analyze(args) -> int:
    table = read_feature_csv(args.features)
    out = _out(args)
    stamp = _stamp(args)
    note = f"config_hash={stamp['config_hash']} seed={stamp['seed']}"
    corr = analysis.correlation_matrix(table)
    analysis.write_matrix_csv(out / "correlation.csv", corr.columns, corr.columns, corr.values, corr.defined, note)
    pca = analysis.pca_project(table, args.components)
    with open(out / "pca.csv", "w", newline="") as fh:
        fh.write(f"# {note} explained_variance_ratio={' '.join(repr(float(v)) for v in pca.explained_variance_ratio)}\n")
        w = csv.writer(fh)
        w.writerow(["file", "segment", "label"] + [f"PC{i + 1}" for i in range(args.components)])
        for m, label, row in zip(table.meta, table.labels, pca.projection):
            w.writerow([m.get("file", ""), m.get("index", ""), int(label), *(repr(float(v)) for v in row)])
    imp = analysis.rf_feature_importance(table, n_estimators=10, max_depth=4, min_samples_split=3, seed=args.seed)
    with open(out / "importance.csv", "w", newline="") as fh:
        fh.write(f"# {note}\n")
        w = csv.writer(fh)
        w.writerow(["feature", "importance"])
        for name, value in sorted(imp.items(), key=lambda kv: -kv[1]):
            w.writerow([name, repr(value)])
    print(f"wrote correlation, PCA and importance tables to {out}")
    return EXIT_OK


# ------------------------------------------------------------------ train / eval


def _training_data(args):
    cfg = _denoise_cfg(args)
    data = manifest_segments(DatasetManifest.load(args.manifest), args.stage, cfg)
    features = tuple(args.features) if args.features else SELECTED_FEATURES
    if args.model == CNN:
        X = mfcc_tensors(data)
    else:
        X = feature_table(data, features).X
    return X, data.labels, features, cfg


def _log_csv(path: Path, log, note: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# {note}\n")
        w = csv.writer(fh)
        w.writerow(["epoch", "train_loss", "train_acc", "test_loss", "test_acc"])
        for row in log:
            w.writerow([row.epoch, repr(row.train_loss), repr(row.train_acc), repr(row.test_loss), repr(row.test_acc)])


def cmd_train(args) -> int:
    X, y, features, cfg = _training_data(args)
    result = train_once(args.model, X, y, args.seed, epochs=args.epochs, features=features)
    out = _out(args)
    stamp = _stamp(args, {"denoise": cfg.to_dict()})
    meta = {**stamp, "stage": args.stage, "test_fraction": 0.2, "metrics": result.metrics.to_dict()}
    save_model(result.model, out / "model.json", meta)
    if result.log:
        _log_csv(out / "epoch_log.csv", result.log, f"config_hash={stamp['config_hash']} seed={args.seed}")
    m = result.metrics
    print(f"{args.model} on stage {args.stage}: accuracy {m.accuracy:.3f}, macro AUC {m.macro_auc:.3f}, "
          f"FPR {m.false_positive_rate:.3f}")
    return EXIT_OK


def cmd_eval(args) -> int:
    out = _out(args)
    if args.model_file:
        model = load_model(args.model_file)
        meta = json.loads(Path(args.model_file).read_text()).get("meta", {})
        args.model = CNN if hasattr(model, "arch") else model.kind
        if args.features is None and hasattr(model, "feature_names"):
            args.features = list(model.feature_names)
        X, y, _, cfg = _training_data(args)
        split_seed = meta.get("seed", args.seed)
        _, test_idx = analysis.stratified_split(y, 0.2, split_seed)
        from .models import compute_metrics, summarize_runs

        metrics = compute_metrics(y[test_idx], model.predict_proba(X[test_idx]))
        summary = summarize_runs([metrics])
    else:
        if args.model is None:
            raise UsageError("give --model or --model-file")
        X, y, features, cfg = _training_data(args)
        _, summary = repeated_runs(args.model, X, y, args.seed, args.runs, epochs=args.epochs, features=features)
    doc = {**_stamp(args, {"denoise": cfg.to_dict()}), "stage": args.stage, "model": args.model, **summary}
    _write_json(out / f"metrics_{args.model}_{args.stage}.json", doc)
    acc, auc = summary["accuracy"], summary["macro_auc"]
    print(f"{args.model} on stage {args.stage} over {summary['runs']} run(s): "
          f"accuracy {acc['mean']:.3f} +/- {acc['std']:.3f}, macro AUC {auc['mean']:.3f} +/- {auc['std']:.3f}")
    return EXIT_OK


# ------------------------------------------------------------------ stream


def cmd_stream(args) -> int:
    model = load_model(args.model_file)
    cfg = _denoise_cfg(args)
    out = _out(args)
    if args.manifest:
        manifest = DatasetManifest.load(args.manifest)
        jobs = [(manifest.path(f.wav), manifest.path(f.positions)) for f in manifest.files]
    else:
        if not (args.input and args.positions):
            raise UsageError("give --manifest, or --input together with --positions")
        jobs = [(Path(args.input), Path(args.positions))]
    stamp = _stamp(args, {"denoise": cfg.to_dict()})
    total = 0
    for wav, pos in jobs:
        report = run_pipeline(load_wav(wav), read_positions(pos), model, args.mode, cfg)
        report.meta = {**stamp, "input": Path(wav).name}
        report.write(out, Path(wav).stem)
        total += len(report.records)
        lat = report.latency
        extra = f", latency p99 {lat['p99'] * 1000:.1f} ms" if lat else ""
        print(f"{Path(wav).name}: {len(report.records)} predictions, {sum(report.drops.values())} drops{extra}")
    print(f"wrote {total} registered predictions to {out}")
    return EXIT_OK


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lded-acoustic", description="Acoustic defect monitoring for laser directed energy deposition.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", help="generate a labeled synthetic corpus")
    s.add_argument("--config", type=Path, help="corpus config JSON (default: the built-in 1300-segment corpus)")
    s.add_argument("--snr-db", type=float, default=5.0, help="mixing SNR for the built-in corpus")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", type=Path, required=True)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("denoise", help="write raw/eq/bp/dn stage WAVs for one file")
    s.add_argument("--input", type=Path, required=True)
    s.add_argument("--denoise-config", type=Path)
    s.add_argument("--out", type=Path, required=True)
    s.set_defaults(func=cmd_denoise)

    def data_args(s, stage_default="dn"):
        s.add_argument("--manifest", type=Path, help="corpus manifest.json")
        s.add_argument("--stage", choices=STAGE_NAMES, default=stage_default)
        s.add_argument("--denoise-config", type=Path)

    s = sub.add_parser("features", help="segment statistics CSV, optionally MFCC tensors")
    data_args(s)
    s.add_argument("--input", type=Path, help="single WAV instead of a manifest")
    s.add_argument("--mfcc", action="store_true", help="also write one MFCC matrix per segment")
    s.add_argument("--mfcc-format", choices=("bin", "csv"), default="bin")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", type=Path, required=True)
    s.set_defaults(func=cmd_features)

    s = sub.add_parser("analyze", help="Spearman correlation, PCA and forest importance tables")
    s.add_argument("--features", type=Path, required=True, help="features.csv from the features command")
    s.add_argument("--components", type=int, default=2)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", type=Path, required=True)
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("train", help="train one model on a stratified 80/20 split")
    data_args(s)
    s.add_argument("--model", choices=MODEL_KINDS, required=True)
    s.add_argument("--features", nargs="+", choices=STAT_NAMES, help="statistics for the classic models")
    s.add_argument("--epochs", type=int, default=CNN_EPOCHS)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", type=Path, required=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", help="held-out metrics, averaged over repeated splits")
    data_args(s)
    s.add_argument("--model", choices=MODEL_KINDS)
    s.add_argument("--model-file", type=Path, help="score a saved model on its own test split instead of training")
    s.add_argument("--features", nargs="+", choices=STAT_NAMES)
    s.add_argument("--runs", type=int, default=1)
    s.add_argument("--epochs", type=int, default=CNN_EPOCHS)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", type=Path, required=True)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("stream", help="run the streaming pipeline and log registered predictions")
    s.add_argument("--model-file", type=Path, required=True)
    s.add_argument("--manifest", type=Path)
    s.add_argument("--input", type=Path)
    s.add_argument("--positions", type=Path, help="CSV with columns t,x,y,z")
    s.add_argument("--mode", choices=("offline", "live"), default="offline")
    s.add_argument("--denoise-config", type=Path)
    s.add_argument("--out", type=Path, required=True)
    s.set_defaults(func=cmd_stream)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "runs", 1) is not None and getattr(args, "runs", 1) < 1:
            raise UsageError("--runs must be at least 1")
        if getattr(args, "epochs", 1) < 1:
            raise UsageError("--epochs must be at least 1")
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    except (DataError, AudioError, SynthError, ModelFormatError, DenoiseConfigError, FileNotFoundError,
            TrainingDiverged, PipelineError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
