"""Merging personalized models into generalized ones.

Three merge methods build a generalized S/NS vector pair from a cohort:

    avrg     unit-weight bipolar average of the correct-class vectors;
    wsub     unit-weight correct class, weighted subtraction of the
             opposite class;
    waddsub  both classes weighted.

Weights compare each incoming subject against the running generalized
vector, so merge order matters for the weighted methods. Denominators of
the averaging formulas are dropped: sign binarization is invariant to
positive scaling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateCohortError
from .hypervector import Accumulator, _philox, hamming_distance, hamming_to_rows, pack_rows
from .similarity import separability
from .training import ClassModel

MERGE_METHODS = ("avrg", "wsub", "waddsub")
WRONG_WEIGHT_CONVENTIONS = ("distance", "similarity")

#: Mean-curve step deltas below this mark the stability plateau.
PLATEAU_TOLERANCE = 0.005


@dataclass
class MergeConfig:
    method: str = "waddsub"
    alpha_corr: float = 1.0
    alpha_wrong: float = 1.0
    iterations: int = 1
    # The printed weighting formula makes the wrong-class weight grow with
    # DISTANCE even though the prose around it reads the other way; both
    # conventions are supported and 'distance' follows the formula.
    wrong_weight_convention: str = "distance"
    order: list = None

    def __post_init__(self):
        if self.method not in MERGE_METHODS:
            raise ValueError(f"method must be one of {MERGE_METHODS}, got {self.method!r}")
        if self.wrong_weight_convention not in WRONG_WEIGHT_CONVENTIONS:
            raise ValueError(
                f"wrong_weight_convention must be one of {WRONG_WEIGHT_CONVENTIONS}"
            )
        for name in ("alpha_corr", "alpha_wrong"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")


@dataclass
class EvolutionCurve:
    """Mean similarity of the growing generalized model to every
    personalized model, recorded after each merged subject."""

    num_subjects: np.ndarray
    sim_ss: np.ndarray
    sim_nsns: np.ndarray
    sim_sns: np.ndarray
    sim_nss: np.ndarray
    separability: np.ndarray

    def series(self):
        return (self.sim_ss, self.sim_nsns, self.sim_sns, self.sim_nss, self.separability)


def weight_correct(hamm_dist: float, alpha: float) -> float:
    """Weight for accumulating a subject's correct-class vector."""
    return alpha * (1.0 - hamm_dist)


def weight_wrong(hamm_dist: float, alpha: float) -> float:
    """Weight for subtracting a subject's opposite-class vector."""
    return alpha * hamm_dist


class _MergeState:
    """Running accumulator for one target class."""

    def __init__(self, cfg: MergeConfig, tie_break_seed: int):
        self.cfg = cfg
        self.seed = tie_break_seed
        self.acc = None

    def add_subject(self, corr, wrong) -> None:
        cfg = self.cfg
        if self.acc is None:
            weight = weight_correct(0.0, cfg.alpha_corr) if cfg.method == "waddsub" else 1.0
            self.acc = Accumulator.from_vector(corr, weight)
            return
        current = self.acc.normalize(self.seed)
        if cfg.method == "avrg":
            self.acc.add(corr, 1.0)
            return
        d_wrong = hamming_distance(wrong, current)
        if cfg.wrong_weight_convention == "distance":
            w_wrong = weight_wrong(d_wrong, cfg.alpha_wrong)
        else:
            w_wrong = weight_correct(d_wrong, cfg.alpha_wrong)
        if cfg.method == "wsub":
            self.acc.add(corr, 1.0)
        else:
            d_corr = hamming_distance(corr, current)
            self.acc.add(corr, weight_correct(d_corr, cfg.alpha_corr))
        self.acc.add(wrong, -w_wrong)

    def finish(self, class_name: str):
        if self.acc.total_weight <= 0:
            raise DegenerateCohortError(
                f"non-positive total weight {self.acc.total_weight:.4f} "
                f"for class {class_name}; cohort cancels itself out"
            )
        return self.acc.normalize(self.seed)


def _check_cohort(cohort):
    cohort = list(cohort)
    if not cohort:
        raise ValueError("empty cohort")
    dim = cohort[0].dim
    for m in cohort:
        if m.dim != dim:
            raise ValueError(f"dimension mismatch: {m.dim} != {dim}")
    return cohort


def generalize(cohort, cfg: MergeConfig, tie_break_seed: int = 0, **meta) -> ClassModel:
    """Merge a cohort of personalized models into one generalized model."""
    cohort = _check_cohort(cohort)
    if cfg.order is not None:
        cohort = [cohort[i] for i in cfg.order]
    state_s = _MergeState(cfg, tie_break_seed)
    state_ns = _MergeState(cfg, tie_break_seed)
    for _ in range(cfg.iterations):
        for m in cohort:
            state_s.add_subject(m.seizure, m.non_seizure)
            state_ns.add_subject(m.non_seizure, m.seizure)
    refs = {m.codebook_ref for m in cohort}
    meta.setdefault("codebook_ref", refs.pop() if len(refs) == 1 else "")
    meta.setdefault("kind", "generalized")
    return ClassModel(
        seizure=state_s.finish("seizure"),
        non_seizure=state_ns.finish("non-seizure"),
        **meta,
    )


def evolution_curve(cohort, cfg: MergeConfig, repetitions: int = 10, seed: int = 0):
    """Merge subjects one at a time in shuffled order, tracking stability.

    After every merged subject the current generalized vectors are
    compared against ALL personalized models (merged or not). Returns
    (per-repetition curves, their pointwise mean).
    """
    cohort = _check_cohort(cohort)
    n = len(cohort)
    if n < 2:
        raise ValueError(f"evolution needs >= 2 subjects, got {n}")
    if repetitions < 1:
        raise ValueError(f"repetitions must be >= 1, got {repetitions}")
    s_rows = pack_rows([m.seizure for m in cohort])
    ns_rows = pack_rows([m.non_seizure for m in cohort])
    curves = []
    for rep in range(repetitions):
        order = _philox(seed, rep).permutation(n)
        state_s = _MergeState(cfg, seed)
        state_ns = _MergeState(cfg, seed)
        rows = {k: np.empty(n) for k in ("ss", "nsns", "sns", "nss")}
        for step, idx in enumerate(order):
            m = cohort[idx]
            state_s.add_subject(m.seizure, m.non_seizure)
            state_ns.add_subject(m.non_seizure, m.seizure)
            gen_s = state_s.acc.normalize(seed)
            gen_ns = state_ns.acc.normalize(seed)
            rows["ss"][step] = 1.0 - hamming_to_rows(s_rows, gen_s).mean()
            rows["nsns"][step] = 1.0 - hamming_to_rows(ns_rows, gen_ns).mean()
            rows["sns"][step] = 1.0 - hamming_to_rows(ns_rows, gen_s).mean()
            rows["nss"][step] = 1.0 - hamming_to_rows(s_rows, gen_ns).mean()
        sep = (rows["ss"] + rows["nsns"]) / 2 - (rows["sns"] + rows["nss"]) / 2
        curves.append(
            EvolutionCurve(
                num_subjects=np.arange(1, n + 1),
                sim_ss=rows["ss"],
                sim_nsns=rows["nsns"],
                sim_sns=rows["sns"],
                sim_nss=rows["nss"],
                separability=sep,
            )
        )
    mean = EvolutionCurve(
        num_subjects=np.arange(1, n + 1),
        sim_ss=np.mean([c.sim_ss for c in curves], axis=0),
        sim_nsns=np.mean([c.sim_nsns for c in curves], axis=0),
        sim_sns=np.mean([c.sim_sns for c in curves], axis=0),
        sim_nss=np.mean([c.sim_nss for c in curves], axis=0),
        separability=np.mean([c.separability for c in curves], axis=0),
    )
    return curves, mean


def plateau_onset(curve: EvolutionCurve, tolerance: float = PLATEAU_TOLERANCE) -> int:
    """Smallest merged-subject count after which every later step moves
    all similarity series (and separability) by less than `tolerance`.

    Returns the final subject count when the curve never settles.
    """
    deltas = np.max([np.abs(np.diff(s)) for s in curve.series()], axis=0)
    violations = np.flatnonzero(deltas >= tolerance)
    if violations.size == 0:
        return int(curve.num_subjects[0])
    return int(curve.num_subjects[violations[-1] + 1])
