"""Inter-subject model similarity, class separability, and the paired
Wilcoxon signed-rank test used to compare per-subject performance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm, rankdata

from .errors import DegenerateInputError
from .hypervector import hamming_to_rows, pack_rows, similarity


@dataclass
class SimilarityMatrices:
    """Pairwise model similarities (1 - normalized Hamming) for a cohort."""

    subject_ids: list
    s_to_s: np.ndarray
    ns_to_ns: np.ndarray
    s_to_ns: np.ndarray  # [i, j] = sim(S_i, NS_j); not symmetric

    @property
    def n(self) -> int:
        return len(self.subject_ids)

    def off_diagonal_means(self):
        """Mean S-S and NS-NS similarity over distinct pairs, plus mean S-NS."""
        mask = ~np.eye(self.n, dtype=bool)
        return (
            float(self.s_to_s[mask].mean()),
            float(self.ns_to_ns[mask].mean()),
            float(self.s_to_ns.mean()),
        )


def pairwise_matrices(cohort) -> SimilarityMatrices:
    """All-pairs similarity between per-subject S and NS model vectors."""
    cohort = list(cohort)
    if len(cohort) < 2:
        raise ValueError(f"need at least 2 models, got {len(cohort)}")
    dim = cohort[0].dim
    for m in cohort:
        if m.dim != dim:
            raise ValueError(f"dimension mismatch: {m.dim} != {dim}")
    s_rows = pack_rows([m.seizure for m in cohort])
    ns_rows = pack_rows([m.non_seizure for m in cohort])
    n = len(cohort)
    s_to_s = np.empty((n, n))
    ns_to_ns = np.empty((n, n))
    s_to_ns = np.empty((n, n))
    for i, m in enumerate(cohort):
        s_to_s[i] = 1.0 - hamming_to_rows(s_rows, m.seizure)
        ns_to_ns[i] = 1.0 - hamming_to_rows(ns_rows, m.non_seizure)
        s_to_ns[i] = 1.0 - hamming_to_rows(ns_rows, m.seizure)
    ids = [m.subject_id or f"subject{i}" for i, m in enumerate(cohort)]
    return SimilarityMatrices(
        subject_ids=ids, s_to_s=s_to_s, ns_to_ns=ns_to_ns, s_to_ns=s_to_ns
    )


def separability(general, cohort) -> float:
    """Correct-class minus opposite-class mean similarity of a generalized
    model against a cohort of personalized models."""
    cohort = list(cohort)
    if not cohort:
        raise ValueError("empty cohort")
    correct = np.mean(
        [
            (similarity(general.seizure, m.seizure) + similarity(general.non_seizure, m.non_seizure)) / 2
            for m in cohort
        ]
    )
    opposite = np.mean(
        [
            (similarity(general.seizure, m.non_seizure) + similarity(general.non_seizure, m.seizure)) / 2
            for m in cohort
        ]
    )
    return float(correct - opposite)


def wilcoxon_signed_rank(x, y):
    """Two-sided paired Wilcoxon test: returns (W, p).

    Zero differences are dropped; absolute differences get average ranks.
    W = min(sum of positive ranks, sum of negative ranks). The p-value is
    exact (full enumeration of sign patterns) for n <= 12, otherwise a
    normal approximation with the usual tie correction and no continuity
    correction.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"need equal-length 1-D inputs, got {x.shape} and {y.shape}")
    diff = x - y
    diff = diff[diff != 0]
    n = diff.size
    if n == 0:
        raise DegenerateInputError("all paired differences are zero")
    if n < 5:
        raise DegenerateInputError(f"need >= 5 nonzero differences, got {n}")
    ranks = rankdata(np.abs(diff))
    w_pos = float(ranks[diff > 0].sum())
    w_neg = float(ranks[diff < 0].sum())
    w = min(w_pos, w_neg)
    total = n * (n + 1) / 2
    if n <= 12:
        subsets = np.arange(1 << n)
        picks = (subsets[:, None] >> np.arange(n)[None, :]) & 1
        t_pos = picks @ ranks
        p = (np.count_nonzero(t_pos <= w) + np.count_nonzero(t_pos >= total - w)) / (1 << n)
    else:
        _, counts = np.unique(np.abs(diff), return_counts=True)
        var = n * (n + 1) * (2 * n + 1) / 24 - ((counts**3 - counts).sum()) / 48
        z = (w - total / 2) / np.sqrt(var)
        p = 2 * norm.cdf(z)
    return w, float(min(p, 1.0))
