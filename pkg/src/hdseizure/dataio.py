"""Synthetic cohort generation and persistence.

Formats:

  signal CSV    header `time_s,<ch1>,...,<chN>,label`, one row per sample
  feature CSV   header `start_sec,label,<name1>,...`, one row per window
  model file    binary, magic "HDCM" (layout documented in save_model)
  report JSON   flat metric dict plus optional per-window series
"""

from __future__ import annotations

import csv
import json
import math
import os
import struct
from dataclasses import dataclass, replace

import numpy as np

from .encoding import Codebooks
from .errors import CorruptModelError, IncompatibleModelsError, ParseError
from .evaluation import EvalReport
from .features import DEFAULT_CHANNELS, FeatureMatrix, SignalRecord
from .hypervector import Hypervector, _philox, random_hypervector
from .training import ClassModel

MODEL_MAGIC = b"HDCM"
MODEL_VERSION = 1

#: resting background scale, microvolts RMS
BACKGROUND_RMS = 30.0
#: seizure rhythm amplitude per unit of (gain - 1)
RHYTHM_BASE_AMP = 15.0


@dataclass
class CohortSpec:
    num_subjects: int = 20
    records_per_subject: int = 3
    fs: float = 256.0
    num_channels: int = 18
    seizure_sec: float = 60.0
    non_seizure_sec: float = 60.0  # 600 for a CHB-MIT-like 10:1 imbalance
    shared_background_weight: float = 0.7
    seizure_freq_range: tuple = (3.0, 8.0)
    seizure_amp_gain: float = 3.0
    seed: int = 0

    def __post_init__(self):
        if self.num_subjects < 1:
            raise ValueError(f"num_subjects must be >= 1, got {self.num_subjects}")
        if self.records_per_subject < 3:
            raise ValueError(
                f"records_per_subject must be >= 3, got {self.records_per_subject}"
            )
        if self.fs <= 0 or self.num_channels < 1:
            raise ValueError("fs must be positive and num_channels >= 1")
        if self.seizure_sec <= 0 or self.non_seizure_sec <= 0:
            raise ValueError("segment durations must be positive")
        if not 0.0 <= self.shared_background_weight <= 1.0:
            raise ValueError(
                f"shared_background_weight must be in [0, 1], "
                f"got {self.shared_background_weight}"
            )
        lo, hi = self.seizure_freq_range
        if not 0 < lo <= hi < self.fs / 2:
            raise ValueError(
                f"seizure_freq_range must satisfy 0 < lo <= hi < fs/2, "
                f"got {self.seizure_freq_range}"
            )
        if self.seizure_amp_gain <= 0:
            raise ValueError(f"seizure_amp_gain must be positive, got {self.seizure_amp_gain}")


def _channel_names(n: int) -> list:
    if n == len(DEFAULT_CHANNELS):
        return list(DEFAULT_CHANNELS)
    return [f"ch{i + 1:02d}" for i in range(n)]


def generate_synthetic_cohort(spec: CohortSpec):
    """Deterministic per-seed cohort of records, grouped by subject.

    Non-seizure spans are 1/f-shaped noise whose spectral profile mixes a
    cohort-shared component with a subject-specific one. Each record's
    final `seizure_sec` span adds a subject rhythm (frequency drawn once
    per subject) at amplitude RHYTHM_BASE_AMP * (gain - 1) with +-10%
    per-record jitter, so gain 1 leaves the background untouched.
    """
    n_ns = round(spec.non_seizure_sec * spec.fs)
    n_total = n_ns + round(spec.seizure_sec * spec.fs)
    chans = _channel_names(spec.num_channels)
    freqs = np.fft.rfftfreq(n_total, 1.0 / spec.fs)
    envelope = np.zeros_like(freqs)
    envelope[1:] = 1.0 / np.sqrt(freqs[1:])
    shared = _philox(spec.seed, 0).uniform(0.5, 1.5, freqs.size)
    w = spec.shared_background_weight
    t = np.arange(n_total) / spec.fs

    cohort = []
    for s in range(spec.num_subjects):
        srng = _philox(spec.seed, (s + 1) << 24)
        profile = envelope * (w * shared + (1 - w) * srng.uniform(0.5, 1.5, freqs.size))
        rhythm_freq = srng.uniform(*spec.seizure_freq_range)
        sid = f"s{s:03d}"
        records = []
        for r in range(spec.records_per_subject):
            rrng = _philox(spec.seed, ((s + 1) << 24) + r + 1)
            noise = rrng.standard_normal((2, spec.num_channels, freqs.size))
            spectra = profile * (noise[0] + 1j * noise[1])
            x = np.fft.irfft(spectra, n_total, axis=1)
            x *= (BACKGROUND_RMS / x.std(axis=1))[:, None]
            amp = RHYTHM_BASE_AMP * (spec.seizure_amp_gain - 1.0) * rrng.uniform(0.9, 1.1)
            freq = rhythm_freq * rrng.uniform(0.9, 1.1)
            phases = rrng.uniform(0.0, 2 * np.pi, spec.num_channels)
            x[:, n_ns:] += amp * np.sin(
                2 * np.pi * freq * t[None, n_ns:] + phases[:, None]
            )
            labels = np.zeros(n_total, np.uint8)
            labels[n_ns:] = 1
            records.append(
                SignalRecord(
                    fs=spec.fs,
                    channels=chans,
                    samples=x,
                    labels=labels,
                    record_id=f"r{r:02d}",
                    subject_id=sid,
                )
            )
        cohort.append(records)
    return cohort


def _flip_bits(hv: Hypervector, fraction: float, rng) -> Hypervector:
    mask = rng.random(hv.dim) < fraction
    return Hypervector.from_bools(hv.to_bools() ^ mask)


def synthetic_model_cohort(num_subjects: int, dim: int = 10000,
                           s_flip: float = 0.35, ns_flip: float = 0.15,
                           class_overlap_flip: float = 0.5, seed: int = 0):
    """Personalized models as noisy copies of two shared prototypes.

    Flipping a fraction p of bits independently in two copies leaves them
    at expected similarity 1 - 2p(1-p); ns_flip < s_flip reproduces the
    higher cross-subject agreement of non-seizure prototypes. The S
    prototype is itself a flipped copy of the NS prototype: at
    class_overlap_flip 0.5 the classes are unrelated, below that they
    share background content (as real ictal prototypes do).
    """
    if num_subjects < 1:
        raise ValueError(f"num_subjects must be >= 1, got {num_subjects}")
    for name, frac in (("s_flip", s_flip), ("ns_flip", ns_flip),
                       ("class_overlap_flip", class_overlap_flip)):
        if not 0.0 <= frac <= 1.0:
            raise ValueError(f"{name} must be in [0, 1], got {frac}")
    base_ns = random_hypervector(seed, 1, dim)
    base_s = _flip_bits(base_ns, class_overlap_flip, _philox(seed, 1 << 16))
    models = []
    for i in range(num_subjects):
        rng = _philox(seed, (i + 2) << 16)
        models.append(
            ClassModel(
                seizure=_flip_bits(base_s, s_flip, rng),
                non_seizure=_flip_bits(base_ns, ns_flip, rng),
                kind="personalized",
                subject_id=f"s{i:03d}",
                source_cohort="synthetic-models",
            )
        )
    return models


# ---- signal CSV ----

def write_record(record: SignalRecord, path):
    t = np.arange(record.samples.shape[1]) / record.fs
    table = np.column_stack([t, record.samples.T, record.labels])
    fmt = ["%.12g"] * (1 + len(record.channels)) + ["%d"]
    header = ",".join(["time_s", *record.channels, "label"])
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        np.savetxt(fh, table, fmt=fmt, delimiter=",")


def read_record(path) -> SignalRecord:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r]  # drop trailing blank line
    if not rows:
        raise ParseError("empty file", line=1)
    header = [c.strip() for c in rows[0]]
    if header[:1] != ["time_s"]:
        raise ParseError(f"first column must be 'time_s', got {header[:1]}", line=1)
    if header[-1] != "label":
        raise ParseError("missing 'label' column", line=1)
    channels = header[1:-1]
    if not channels:
        raise ParseError("no channel columns between 'time_s' and 'label'", line=1)
    if len(rows) < 3:
        raise ParseError("need at least two sample rows to infer fs", line=len(rows))
    ncol = len(header)
    times, labels = [], []
    samples = np.empty((len(rows) - 1, len(channels)))
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != ncol:
            raise ParseError(f"expected {ncol} cells, got {len(row)}", line=i)
        try:
            times.append(float(row[0]))
            samples[i - 2] = [float(c) for c in row[1:-1]]
        except ValueError:
            raise ParseError(f"non-numeric cell in row {row}", line=i) from None
        cell = row[-1].strip()
        if cell not in ("0", "1"):
            raise ParseError(f"label must be 0 or 1, got {cell!r}", line=i)
        labels.append(int(cell))
    fs = 1.0 / (times[1] - times[0])
    if abs(fs - round(fs)) < 1e-6:
        fs = float(round(fs))
    return SignalRecord(
        fs=fs,
        channels=channels,
        samples=samples.T.copy(),
        labels=np.array(labels, np.uint8),
    )


# ---- feature CSV ----

def write_features(features: FeatureMatrix, path):
    header = ",".join(["start_sec", "label", *features.feature_names])
    table = np.column_stack(
        [features.window_start_sec, features.window_labels, features.values]
    )
    fmt = ["%.17g", "%d"] + ["%.17g"] * features.num_features
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        np.savetxt(fh, table, fmt=fmt, delimiter=",")


def read_features(path, record_id: str = "", subject_id: str = "") -> FeatureMatrix:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise ParseError("empty file", line=1)
    header = [c.strip() for c in rows[0]]
    if header[:2] != ["start_sec", "label"]:
        raise ParseError("header must start with 'start_sec,label'", line=1)
    names = header[2:]
    if not names:
        raise ParseError("no feature columns", line=1)
    data = np.empty((len(rows) - 1, len(header)))
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} cells, got {len(row)}", line=i)
        try:
            data[i - 2] = [float(c) for c in row]
        except ValueError:
            raise ParseError(f"non-numeric cell in row {row}", line=i) from None
    channels = []
    for name in names:
        prefix = name.split(":", 1)[0] if ":" in name else ""
        if prefix and prefix not in channels:
            channels.append(prefix)
    if not channels or len(names) % len(channels):
        channels = ["all"]
    return FeatureMatrix(
        values=data[:, 2:].copy(),
        window_labels=data[:, 1].astype(np.uint8),
        window_start_sec=data[:, 0].copy(),
        feature_names=names,
        channels=channels,
        features_per_channel=len(names) // len(channels),
        record_id=record_id,
        subject_id=subject_id,
    )


# ---- cohort directories ----

def _cohort_paths(dirpath):
    """(subject_id, record_id, path) triples grouped-sortable by filename."""
    out = []
    for name in sorted(os.listdir(dirpath)):
        if name.endswith(".csv") and "__" in name:
            sid, rid = name[:-4].split("__", 1)
            out.append((sid, rid, os.path.join(dirpath, name)))
    return out


def write_cohort(cohort, dirpath, writer=write_record):
    os.makedirs(dirpath, exist_ok=True)
    for records in cohort:
        for rec in records:
            writer(rec, os.path.join(dirpath, f"{rec.subject_id}__{rec.record_id}.csv"))


def _read_cohort_dir(dirpath, one):
    groups, order = {}, []
    for sid, rid, path in _cohort_paths(dirpath):
        if sid not in groups:
            groups[sid] = []
            order.append(sid)
        groups[sid].append(one(path, rid, sid))
    if not order:
        raise ParseError(f"no '<subject>__<record>.csv' files in {dirpath}", line=0)
    return [groups[sid] for sid in order]


def read_cohort(dirpath):
    return _read_cohort_dir(
        dirpath,
        lambda path, rid, sid: replace(read_record(path), record_id=rid, subject_id=sid),
    )


def read_feature_cohort(dirpath):
    return _read_cohort_dir(
        dirpath, lambda path, rid, sid: read_features(path, record_id=rid, subject_id=sid)
    )


# ---- model files ----

def _words_per_vector(dim: int) -> int:
    return math.ceil(dim / 64)


def _vector_bytes(hv: Hypervector) -> bytes:
    raw = hv.bits.tobytes()
    return raw + b"\x00" * (_words_per_vector(hv.dim) * 8 - len(raw))


def save_model(model: ClassModel, codebooks: Codebooks, path):
    """Binary layout, all integers little-endian:

      magic "HDCM" | version u8 | dim u32 | metaLen u32 | metadata JSON |
      vectors S, NS, level[0..L), id[0..F), each ceil(dim/64) u64 words
      (bit-packed, zero-padded past dim).
    """
    if model.dim != codebooks.dim:
        raise IncompatibleModelsError(
            f"model dim {model.dim} != codebook dim {codebooks.dim}"
        )
    meta = {
        "kind": model.kind,
        "sourceCohort": model.source_cohort,
        "subjectId": model.subject_id,
        "codebookRef": model.codebook_ref,
        "encoder": {
            "dim": codebooks.dim,
            "numLevels": codebooks.num_levels,
            "numFeatures": codebooks.num_features,
            "seed": codebooks.seed,
        },
        "featureRanges": {
            "min": codebooks.feature_min.tolist() if codebooks.is_fitted else None,
            "max": codebooks.feature_max.tolist() if codebooks.is_fitted else None,
        },
    }
    blob = json.dumps(meta, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<B", MODEL_VERSION))
        fh.write(struct.pack("<I", codebooks.dim))
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for hv in (model.seizure, model.non_seizure,
                   *codebooks.level_vectors, *codebooks.id_vectors):
            fh.write(_vector_bytes(hv))


def load_model(path):
    """Inverse of save_model; returns (ClassModel, Codebooks)."""
    with open(path, "rb") as fh:
        buf = fh.read()
    if len(buf) < 13:
        raise CorruptModelError(f"file too short ({len(buf)} bytes)")
    if buf[:4] != MODEL_MAGIC:
        raise CorruptModelError(f"bad magic {buf[:4]!r}")
    version = buf[4]
    if version != MODEL_VERSION:
        raise CorruptModelError(f"unsupported format version {version}")
    dim, meta_len = struct.unpack_from("<II", buf, 5)
    if len(buf) < 13 + meta_len:
        raise CorruptModelError("truncated metadata block")
    try:
        meta = json.loads(buf[13 : 13 + meta_len].decode("utf-8"))
        enc = meta["encoder"]
        num_levels, num_features = enc["numLevels"], enc["numFeatures"]
        ranges = meta["featureRanges"]
    except (ValueError, KeyError, UnicodeDecodeError) as exc:
        raise CorruptModelError(f"unreadable metadata: {exc}") from None
    if enc.get("dim") != dim:
        raise CorruptModelError("metadata dim disagrees with header")
    stride = _words_per_vector(dim) * 8
    count = 2 + num_levels + num_features
    expected = 13 + meta_len + count * stride
    if len(buf) != expected:
        raise CorruptModelError(
            f"expected {expected} bytes for {count} vectors, got {len(buf)}"
        )
    nbytes = math.ceil(dim / 8)

    def vector(k: int) -> Hypervector:
        start = 13 + meta_len + k * stride
        bits = np.frombuffer(buf, np.uint8, nbytes, offset=start).copy()
        return Hypervector(bits, dim)

    try:
        vectors = [vector(k) for k in range(count)]
        model = ClassModel(
            seizure=vectors[0],
            non_seizure=vectors[1],
            kind=meta["kind"],
            source_cohort=meta["sourceCohort"],
            subject_id=meta["subjectId"],
            codebook_ref=meta.get("codebookRef", ""),
        )
        books = Codebooks(
            dim=dim,
            num_levels=num_levels,
            seed=enc["seed"],
            id_vectors=vectors[2 + num_levels :],
            level_vectors=vectors[2 : 2 + num_levels],
            feature_min=None if ranges["min"] is None else np.asarray(ranges["min"], float),
            feature_max=None if ranges["max"] is None else np.asarray(ranges["max"], float),
        )
    except (ValueError, KeyError) as exc:
        raise CorruptModelError(f"invalid model contents: {exc}") from None
    return model, books


# ---- reports and plot-ready curves ----

def write_report(report: EvalReport, path, include_series: bool = False):
    doc = {
        "subjectId": report.subject_id,
        "modelKind": report.model_kind,
        "metrics": report.metrics,
    }
    if include_series:
        doc["series"] = {
            "truth": report.truth.tolist(),
            "pSeizure": report.p_seizure.tolist(),
            "predictions": {k: v.tolist() for k, v in report.predictions.items()},
        }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_report(path) -> EvalReport:
    with open(path) as fh:
        doc = json.load(fh)
    series = doc.get("series", {})
    return EvalReport(
        subject_id=doc["subjectId"],
        model_kind=doc["modelKind"],
        metrics=doc["metrics"],
        truth=np.array(series.get("truth", []), np.uint8),
        p_seizure=np.array(series.get("pSeizure", []), float),
        predictions={
            k: np.array(v, np.uint8)
            for k, v in series.get("predictions", {}).items()
        },
    )


def write_reports_csv(reports, path):
    reports = list(reports)
    keys = list(reports[0].metrics.keys())
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["subject", "kind", *keys])
        for r in reports:
            w.writerow([r.subject_id, r.model_kind,
                        *(f"{r.metrics[k]:.17g}" for k in keys)])


def write_matrices_csv(mats, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["matrix", "subject", *mats.subject_ids])
        for name, m in (("sToS", mats.s_to_s), ("nsToNs", mats.ns_to_ns),
                        ("sToNs", mats.s_to_ns)):
            for sid, row in zip(mats.subject_ids, m):
                w.writerow([name, sid, *(f"{v:.17g}" for v in row)])


def write_evolution_csv(curve, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["numSubjects", "simSS", "simNSNS", "simSNS", "simNSS",
                    "separability"])
        for i in range(curve.num_subjects.size):
            w.writerow([
                int(curve.num_subjects[i]),
                *(f"{s[i]:.17g}" for s in curve.series()),
            ])


def write_sweep_csv(sweep, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["threshold", "fractionGen", "meanF1Episode",
                    "meanF1Duration", "oracleF1Episode", "oracleF1Duration"])
        for i, th in enumerate(sweep.thresholds):
            w.writerow([
                f"{th:.17g}",
                f"{sweep.fraction_gen[i]:.17g}",
                f"{sweep.mean_f1_episode[i]:.17g}",
                f"{sweep.mean_f1_duration[i]:.17g}",
                f"{sweep.oracle_f1_episode:.17g}",
                f"{sweep.oracle_f1_duration:.17g}",
            ])
