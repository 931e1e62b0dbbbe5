"""Per-class prototype training and window classification.

Two trainers build a seizure / non-seizure prototype pair from encoded
windows: single-pass majority bundling, and an online scheme that weights
each sample by how unfamiliar it is to its own class and pushes it out of
a wrongly-predicting class.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import MissingClassError
from .hypervector import Accumulator, Hypervector, bundle, hamming_distance

MODEL_KINDS = ("personalized", "generalized", "hybrid")

SEIZURE = 1
NON_SEIZURE = 0


@dataclass
class ClassModel:
    """A trained seizure/non-seizure prototype pair plus provenance."""

    seizure: Hypervector
    non_seizure: Hypervector
    kind: str = "personalized"
    source_cohort: str = ""
    subject_id: str = ""
    codebook_ref: str = ""

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"kind must be one of {MODEL_KINDS}, got {self.kind!r}")
        if self.seizure.dim != self.non_seizure.dim:
            raise ValueError("class vectors must share a dimension")

    @property
    def dim(self) -> int:
        return self.seizure.dim


@dataclass
class TrainConfig:
    mode: str = "online"
    alpha: float = 1.0
    epochs: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("standard", "online"):
            raise ValueError(f"mode must be 'standard' or 'online', got {self.mode!r}")
        if not self.alpha >= 0 or self.alpha != self.alpha:
            raise ValueError(f"alpha must be finite and >= 0, got {self.alpha}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")


def _split_classes(samples):
    samples = list(samples)
    for _, label in samples:
        if label not in (0, 1):
            raise ValueError(f"labels must be 0 or 1, got {label!r}")
    if not any(label == SEIZURE for _, label in samples):
        raise MissingClassError("no seizure samples")
    if not any(label == NON_SEIZURE for _, label in samples):
        raise MissingClassError("no non-seizure samples")
    return samples


def train(samples, cfg: TrainConfig, **kwargs) -> ClassModel:
    if cfg.mode == "standard":
        return train_standard(samples, cfg, **kwargs)
    return train_online(samples, cfg, **kwargs)


def train_standard(samples, cfg: TrainConfig, **meta) -> ClassModel:
    """Each class vector is the majority bundle of its samples."""
    samples = _split_classes(samples)
    s_vec = bundle((v for v, y in samples if y == SEIZURE), tie_break_seed=cfg.seed)
    ns_vec = bundle((v for v, y in samples if y == NON_SEIZURE), tie_break_seed=cfg.seed)
    return ClassModel(seizure=s_vec, non_seizure=ns_vec, **meta)


def train_online(samples, cfg: TrainConfig, stats: dict = None, **meta) -> ClassModel:
    """OnlineHD-style single-pass training, repeated for cfg.epochs.

    Each class accumulator starts from the first sample of that class.
    A sample of class C is added to acc_C with weight alpha * (1 - s_C),
    where s_C is its similarity to the current binarized acc_C; when the
    model currently predicts the wrong class W, the sample is also
    subtracted from acc_W with weight alpha * s_W. Similarities are taken
    before either accumulator is touched.
    """
    samples = _split_classes(samples)
    acc = {SEIZURE: None, NON_SEIZURE: None}
    mispredictions = 0
    subtractions = 0
    for _ in range(cfg.epochs):
        for x, label in samples:
            if acc[label] is None:
                acc[label] = Accumulator.from_vector(x)
                continue
            other = SEIZURE if label == NON_SEIZURE else NON_SEIZURE
            s_own = 1.0 - hamming_distance(x, acc[label].normalize(cfg.seed))
            s_other = None
            if acc[other] is not None:
                s_other = 1.0 - hamming_distance(x, acc[other].normalize(cfg.seed))
            acc[label].add(x, cfg.alpha * (1.0 - s_own))
            if s_other is not None:
                d_s = 1.0 - (s_own if label == SEIZURE else s_other)
                d_ns = 1.0 - (s_other if label == SEIZURE else s_own)
                predicted = SEIZURE if d_s < d_ns else NON_SEIZURE
                if predicted != label:
                    mispredictions += 1
                    subtractions += 1
                    acc[other].add(x, -cfg.alpha * s_other)
    if stats is not None:
        stats["mispredictions"] = mispredictions
        stats["subtractions"] = subtractions
    return ClassModel(
        seizure=acc[SEIZURE].normalize(cfg.seed),
        non_seizure=acc[NON_SEIZURE].normalize(cfg.seed),
        **meta,
    )


def classify(x: Hypervector, model: ClassModel):
    """Nearest-prototype label: (label, dS, dNS); ties go to non-seizure."""
    if x.dim != model.dim:
        raise ValueError(f"dimension mismatch: {x.dim} != {model.dim}")
    d_s = hamming_distance(x, model.seizure)
    d_ns = hamming_distance(x, model.non_seizure)
    label = SEIZURE if d_s < d_ns else NON_SEIZURE
    return label, d_s, d_ns


def class_probability(d_s: float, d_ns: float) -> float:
    """Pseudo-probability of seizure from the two prototype distances."""
    s_s = 1.0 - d_s
    s_ns = 1.0 - d_ns
    if s_s + s_ns == 0:
        return 0.5
    return s_s / (s_s + s_ns)
