"""Evaluation protocols: episode/duration metrics, probability
postprocessing, leave-one-seizure-out and leave-one-subject-out
cross-validation, and cross-cohort transfer.

Metric keys are flat dotted strings `<level>.<post>.<name>` with
level in {duration, episode}, post in {raw, bayes, movavg} and name in
{sensitivity, precision, f1}.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .encoding import (
    DEFAULT_DIM,
    DEFAULT_LEVELS,
    Codebooks,
    build_codebooks,
    encode_windows,
    fit_ranges,
)
from .errors import IncompatibleModelsError, InsufficientDataError
from .generalization import MergeConfig, generalize
from .hybrid import HYBRID_MODES, compose_hybrid
from .hypervector import hamming_to_rows, pack_rows
from .training import ClassModel, TrainConfig, train

METRIC_LEVELS = ("duration", "episode")
POST_STAGES = ("raw", "bayes", "movavg")
METRIC_NAMES = ("sensitivity", "precision", "f1")


@dataclass
class EvalConfig:
    dim: int = DEFAULT_DIM
    num_levels: int = DEFAULT_LEVELS
    seed: int = 0
    train: TrainConfig = field(default_factory=TrainConfig)
    merge: MergeConfig = field(default_factory=MergeConfig)
    step_sec: float = 0.5
    bayes_window_sec: float = 5.0
    bayes_threshold: float = 1.5
    movavg_window_sec: float = 5.0
    jobs: int = 1


@dataclass
class EvalReport:
    subject_id: str
    model_kind: str
    metrics: dict
    truth: np.ndarray
    p_seizure: np.ndarray
    predictions: dict  # stage -> per-window binary array


def _as_binary(x, name):
    arr = np.asarray(x)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D sequence")
    if not np.isin(arr, (0, 1)).all():
        raise ValueError(f"{name} must contain only 0 and 1")
    return arr.astype(np.uint8)


def _f1(tpr: float, ppv: float) -> float:
    if tpr + ppv == 0:
        return 0.0
    return 2 * tpr * ppv / (tpr + ppv)


def duration_metrics(pred, truth):
    """Window-wise (sensitivity, precision, F1)."""
    pred = _as_binary(pred, "pred")
    truth = _as_binary(truth, "truth")
    if pred.shape != truth.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {truth.shape}")
    tp = int(np.count_nonzero(pred & truth))
    fp = int(np.count_nonzero(pred & ~truth & 1))
    fn = int(np.count_nonzero(~pred & 1 & truth))
    tpr = 1.0 if tp + fn == 0 else tp / (tp + fn)
    ppv = 1.0 if tp + fp == 0 else tp / (tp + fp)
    return tpr, ppv, _f1(tpr, ppv)


def _runs(x: np.ndarray):
    """Maximal runs of 1s as (start, end) inclusive index pairs."""
    edges = np.flatnonzero(np.diff(np.concatenate(([0], x, [0]))))
    return list(zip(edges[::2], edges[1::2] - 1))


def episode_metrics(pred, truth):
    """Episode-level (sensitivity, precision, F1) under any-overlap matching."""
    pred = _as_binary(pred, "pred")
    truth = _as_binary(truth, "truth")
    if pred.shape != truth.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {truth.shape}")
    pred_runs = _runs(pred)
    truth_runs = _runs(truth)
    pred_cum = np.concatenate(([0], np.cumsum(pred, dtype=np.int64)))
    truth_cum = np.concatenate(([0], np.cumsum(truth, dtype=np.int64)))
    detected = sum(1 for s, e in truth_runs if pred_cum[e + 1] - pred_cum[s] > 0)
    true_preds = sum(1 for s, e in pred_runs if truth_cum[e + 1] - truth_cum[s] > 0)
    tpr = 1.0 if not truth_runs else detected / len(truth_runs)
    ppv = 1.0 if not pred_runs else true_preds / len(pred_runs)
    return tpr, ppv, _f1(tpr, ppv)


def bayes_postprocess(p_seizure, window_sec: float = 5.0, threshold: float = 1.5, step_sec: float = 0.5):
    """Trailing-window cumulative log-odds decision.

    Output[t] = 1 iff the product of p/(1-p) over the last
    ceil(window_sec/step_sec) entries reaches `threshold`; at the start
    the window grows from a single entry.
    """
    if window_sec <= 0 or threshold <= 0 or step_sec <= 0:
        raise ValueError("window_sec, threshold and step_sec must all be positive")
    p = np.clip(np.asarray(p_seizure, dtype=np.float64), 1e-6, 1 - 1e-6)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("p_seizure must be a non-empty 1-D sequence")
    width = math.ceil(window_sec / step_sec)
    log_odds = np.log(p / (1 - p))
    cum = np.concatenate(([0.0], np.cumsum(log_odds)))
    t = np.arange(p.size)
    window_sum = cum[t + 1] - cum[np.maximum(t + 1 - width, 0)]
    return (window_sum >= math.log(threshold)).astype(np.uint8)


def moving_average_postprocess(pred, window_sec: float = 5.0, step_sec: float = 0.5):
    """Centered majority vote; ties go to 0; edge windows shrink."""
    if window_sec <= 0 or step_sec <= 0:
        raise ValueError("window_sec and step_sec must be positive")
    pred = _as_binary(pred, "pred")
    width = math.ceil(window_sec / step_sec)
    n = pred.size
    cum = np.concatenate(([0], np.cumsum(pred, dtype=np.int64)))
    t = np.arange(n)
    lo = np.maximum(t - (width - 1) // 2, 0)
    hi = np.minimum(t + width // 2, n - 1)
    ones = cum[hi + 1] - cum[lo]
    size = hi - lo + 1
    return (2 * ones > size).astype(np.uint8)


def _metrics_block(truth, predictions: dict) -> dict:
    metrics = {}
    for stage, pred in predictions.items():
        for level, fn in (("duration", duration_metrics), ("episode", episode_metrics)):
            tpr, ppv, f1 = fn(pred, truth)
            metrics[f"{level}.{stage}.sensitivity"] = tpr
            metrics[f"{level}.{stage}.precision"] = ppv
            metrics[f"{level}.{stage}.f1"] = f1
    return metrics


def _classify_rows(encodings, model: ClassModel):
    rows = pack_rows(encodings)
    d_s = hamming_to_rows(rows, model.seizure)
    d_ns = hamming_to_rows(rows, model.non_seizure)
    raw = (d_s < d_ns).astype(np.uint8)
    sim = (1 - d_s) + (1 - d_ns)
    with np.errstate(invalid="ignore"):
        p = np.where(sim > 0, (1 - d_s) / np.where(sim > 0, sim, 1.0), 0.5)
    return raw, p


def _report(subject_id, model_kind, truth, raw, p_seizure, cfg: EvalConfig) -> EvalReport:
    predictions = {
        "raw": raw,
        "bayes": bayes_postprocess(
            p_seizure, cfg.bayes_window_sec, cfg.bayes_threshold, cfg.step_sec
        ),
        "movavg": moving_average_postprocess(raw, cfg.movavg_window_sec, cfg.step_sec),
    }
    return EvalReport(
        subject_id=subject_id,
        model_kind=model_kind,
        metrics=_metrics_block(truth, predictions),
        truth=truth,
        p_seizure=p_seizure,
        predictions=predictions,
    )


def _training_samples(encodings, labels):
    return list(zip(encodings, (int(y) for y in labels)))


def _subject_id_of(records) -> str:
    for fm in records:
        if fm.subject_id:
            return fm.subject_id
    return ""


def _stack_values(records):
    return np.vstack([fm.values for fm in records])


def _stack_labels(records):
    return np.concatenate([fm.window_labels for fm in records])


def _feature_count(records) -> int:
    counts = {fm.num_features for fm in records}
    if len(counts) != 1:
        raise ValueError(f"records disagree on feature count: {sorted(counts)}")
    return counts.pop()


def _map_jobs(fn, items, jobs: int):
    if jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def cv_personalized(records, cfg: EvalConfig = None, subject_id: str = "") -> EvalReport:
    """Leave-one-record-out (one seizure per record) on a single subject.

    Every fold refits feature ranges on its training records only; the
    held-out predictions are reassembled in the original record order
    before postprocessing.
    """
    cfg = cfg or EvalConfig()
    records = list(records)
    if len(records) < 3:
        raise InsufficientDataError(
            f"leave-one-seizure-out needs >= 3 records, got {len(records)}"
        )
    subject_id = subject_id or _subject_id_of(records)
    nfeat = _feature_count(records)
    base = build_codebooks(nfeat, cfg.num_levels, cfg.dim, cfg.seed)
    fold_raw, fold_p = [], []
    for k in range(len(records)):
        train_recs = [r for i, r in enumerate(records) if i != k]
        books = fit_ranges(base, _stack_values(train_recs))
        enc_train = encode_windows(_stack_values(train_recs), books)
        model = train(
            _training_samples(enc_train, _stack_labels(train_recs)),
            cfg.train,
            subject_id=subject_id,
        )
        enc_test = encode_windows(records[k].values, books)
        raw, p = _classify_rows(enc_test, model)
        fold_raw.append(raw)
        fold_p.append(p)
    truth = _stack_labels(records)
    return _report(
        subject_id, "personalized", truth, np.concatenate(fold_raw), np.concatenate(fold_p), cfg
    )


def train_personalized(records, books: Codebooks, cfg: EvalConfig, subject_id: str = "") -> ClassModel:
    """Train one personalized model on all of a subject's records."""
    enc = encode_windows(_stack_values(records), books)
    return train(
        _training_samples(enc, _stack_labels(records)),
        cfg.train,
        subject_id=subject_id or _subject_id_of(records),
    )


def _loso_fold(cohort, held_out: int, cfg: EvalConfig):
    """Ranges, per-subject models and the merged model for one fold."""
    train_subjects = [recs for i, recs in enumerate(cohort) if i != held_out]
    nfeat = _feature_count([fm for recs in cohort for fm in recs])
    base = build_codebooks(nfeat, cfg.num_levels, cfg.dim, cfg.seed)
    books = fit_ranges(base, np.vstack([_stack_values(recs) for recs in train_subjects]))
    models = [train_personalized(recs, books, cfg) for recs in train_subjects]
    merged = generalize(models, cfg.merge, tie_break_seed=cfg.seed)
    return books, models, merged


def cv_generalized(cohort, cfg: EvalConfig = None):
    """Leave-one-subject-out: merge everyone else's personalized models,
    evaluate on the held-out subject. Returns one report per subject."""
    cfg = cfg or EvalConfig()
    cohort = [list(recs) for recs in cohort]
    if len(cohort) < 2:
        raise InsufficientDataError(
            f"leave-one-subject-out needs >= 2 subjects, got {len(cohort)}"
        )

    def run(i):
        books, _, merged = _loso_fold(cohort, i, cfg)
        enc = encode_windows(_stack_values(cohort[i]), books)
        raw, p = _classify_rows(enc, merged)
        return _report(
            _subject_id_of(cohort[i]) or f"subject{i}",
            "generalized",
            _stack_labels(cohort[i]),
            raw,
            p,
            cfg,
        )

    return _map_jobs(run, list(range(len(cohort))), cfg.jobs)


TRANSFER_MODES = ("generalized",) + HYBRID_MODES


def transfer_eval(source, target_cohort, mode: str = "generalized", cfg: EvalConfig = None, source_codebooks: Codebooks = None):
    """Apply source-cohort knowledge to every target subject.

    `source` is either a raw cohort (list of per-subject FeatureMatrix
    lists) or a list of pre-trained personalized ClassModels with their
    `source_codebooks`. Source subjects sharing a target's subject_id are
    excluded from its merge, so running a cohort against itself reproduces
    leave-one-subject-out. Hybrid modes swap in a class vector trained on
    the target subject's own data, encoded with the transfer codebooks.
    """
    cfg = cfg or EvalConfig()
    if mode not in TRANSFER_MODES:
        raise ValueError(f"mode must be one of {TRANSFER_MODES}, got {mode!r}")
    target_cohort = [list(recs) for recs in target_cohort]
    if not target_cohort:
        raise InsufficientDataError("empty target cohort")
    target_nfeat = _feature_count([fm for recs in target_cohort for fm in recs])

    raw_source = not (
        isinstance(source, ClassModel)
        or (isinstance(source, (list, tuple)) and source and isinstance(source[0], ClassModel))
    )
    if raw_source:
        source = [list(recs) for recs in source]
        if _feature_count([fm for recs in source for fm in recs]) != target_nfeat:
            raise IncompatibleModelsError(
                "source and target cohorts use different feature counts"
            )
        source_models, source_books = None, None
    else:
        source_models = [source] if isinstance(source, ClassModel) else list(source)
        if source_codebooks is None:
            raise IncompatibleModelsError("pre-trained source models need their codebooks")
        source_books = source_codebooks
        if source_books.num_features != target_nfeat:
            raise IncompatibleModelsError(
                f"source encoder expects {source_books.num_features} features, "
                f"target provides {target_nfeat}"
            )
        for m in source_models:
            if m.dim != source_books.dim:
                raise IncompatibleModelsError("source model dim differs from codebooks dim")

    def run(target_recs):
        target_id = _subject_id_of(target_recs)
        if raw_source:
            eligible = [recs for recs in source if _subject_id_of(recs) != target_id or not target_id]
            if not eligible:
                raise InsufficientDataError("no source subjects left after exclusion")
            nfeat = target_nfeat
            base = build_codebooks(nfeat, cfg.num_levels, cfg.dim, cfg.seed)
            books = fit_ranges(base, np.vstack([_stack_values(recs) for recs in eligible]))
            models = [train_personalized(recs, books, cfg) for recs in eligible]
        else:
            books = source_books
            models = [m for m in source_models if m.subject_id != target_id or not target_id]
            if not models:
                raise InsufficientDataError("no source models left after exclusion")
        if len(models) == 1 and models[0].kind == "generalized":
            merged = models[0]
        else:
            merged = generalize(models, cfg.merge, tie_break_seed=cfg.seed)
        if mode == "generalized":
            applied = merged
        else:
            pers = train_personalized(target_recs, books, cfg, subject_id=target_id)
            applied = compose_hybrid(pers, merged, mode)
        enc = encode_windows(_stack_values(target_recs), books)
        raw, p = _classify_rows(enc, applied)
        return _report(target_id or "target", mode, _stack_labels(target_recs), raw, p, cfg)

    return _map_jobs(run, target_cohort, cfg.jobs)


def summarize(reports) -> dict:
    """Mean of every metric across reports."""
    reports = list(reports)
    if not reports:
        raise ValueError("no reports to summarize")
    keys = reports[0].metrics.keys()
    return {k: float(np.mean([r.metrics[k] for r in reports])) for k in keys}


def per_subject_scores(reports, stage: str = "raw") -> dict:
    """Per-subject F1 arrays for the hybrid selection sweep."""
    return {
        "f1_episode": np.array([r.metrics[f"episode.{stage}.f1"] for r in reports]),
        "f1_duration": np.array([r.metrics[f"duration.{stage}.f1"] for r in reports]),
    }
