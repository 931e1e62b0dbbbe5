"""Feature-vector to hypervector encoding via ID and level codebooks.

Each feature index owns a random ID vector; feature values quantize onto
an interpolation chain of level vectors. A window's encoding is the
majority bundle over features of bind(id[f], level[quantize(x[f])]).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidDimensionError
from .hypervector import Hypervector, random_hypervector, tie_break_vector

DEFAULT_DIM = 10000
DEFAULT_LEVELS = 20

#: Tag namespace for the level chain; feature IDs use tags 0..numFeatures-1.
LEVEL_CHAIN_TAG = 1 << 33


@dataclass(eq=False)
class Codebooks:
    """Immutable encoding state: ID vectors, level chain, feature ranges.

    `feature_min`/`feature_max` are None until `fit_ranges` has seen
    training data; encoding requires fitted ranges.
    """

    dim: int
    num_levels: int
    seed: int
    id_vectors: list
    level_vectors: list
    feature_min: np.ndarray = None
    feature_max: np.ndarray = None
    _unpacked: tuple = field(default=None, repr=False)

    @property
    def num_features(self) -> int:
        return len(self.id_vectors)

    @property
    def is_fitted(self) -> bool:
        return self.feature_min is not None

    def unpacked_bits(self):
        """Cached {0,1} uint8 matrices and batch-encoding tables.

        Returns (id_bits (F,D), level_bits (L,D), base_count (D,),
        signed_base (F,D) float32) where base = id ^ level_0; the last two
        drive the block-structured encoding kernel.
        """
        if self._unpacked is None:
            ids = np.stack([v.to_bools() for v in self.id_vectors])
            levels = np.stack([v.to_bools() for v in self.level_vectors])
            base = np.bitwise_xor(ids, levels[0][None, :])
            total = base.sum(axis=0, dtype=np.int32)
            signed = (1 - 2 * base.astype(np.int8)).astype(np.float32)
            self._unpacked = (ids, levels, total, signed)
        return self._unpacked


def build_codebooks(
    num_features: int,
    num_levels: int = DEFAULT_LEVELS,
    dim: int = DEFAULT_DIM,
    seed: int = 0,
) -> Codebooks:
    """Deterministically construct codebooks for (num_features, seed).

    Consecutive level vectors differ by one disjoint block of
    floor(dim / (2(L-1))) flipped positions, so distance along the chain
    is exactly proportional to level separation and the chain ends are
    close to orthogonal.
    """
    if num_features < 1:
        raise ValueError(f"need at least one feature, got {num_features}")
    if num_levels < 2:
        raise ValueError(f"need at least two levels, got {num_levels}")
    if num_levels > dim // 2:
        raise InvalidDimensionError(
            f"{num_levels} levels need dim >= {2 * num_levels}, got {dim}"
        )
    ids = [random_hypervector(seed, f, dim) for f in range(num_features)]
    block = dim // (2 * (num_levels - 1))
    bits = random_hypervector(seed, LEVEL_CHAIN_TAG, dim).to_bools()
    levels = [Hypervector.from_bools(bits)]
    for k in range(num_levels - 1):
        bits = bits.copy()
        sel = slice(k * block, (k + 1) * block)
        bits[sel] = 1 - bits[sel]
        levels.append(Hypervector.from_bools(bits))
    return Codebooks(
        dim=dim, num_levels=num_levels, seed=seed, id_vectors=ids, level_vectors=levels
    )


def fit_ranges(codebooks: Codebooks, values: np.ndarray) -> Codebooks:
    """Return codebooks with per-feature (min, max) taken from `values`.

    Ranges must come from the training split only; test-time values
    outside them clamp silently. Constant features are kept but warned
    about, and later quantize to level 0.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[1] != codebooks.num_features:
        raise ValueError(
            f"expected (windows, {codebooks.num_features}) matrix, got {values.shape}"
        )
    if values.shape[0] == 0:
        raise ValueError("cannot fit ranges on an empty matrix")
    lo = values.min(axis=0)
    hi = values.max(axis=0)
    flat = int((lo >= hi).sum())
    if flat:
        warnings.warn(
            f"{flat} feature(s) are constant on the training split; "
            "they will encode at level 0",
            stacklevel=2,
        )
    return Codebooks(
        dim=codebooks.dim,
        num_levels=codebooks.num_levels,
        seed=codebooks.seed,
        id_vectors=codebooks.id_vectors,
        level_vectors=codebooks.level_vectors,
        feature_min=lo,
        feature_max=hi,
        _unpacked=codebooks._unpacked,
    )


def quantize(value: float, lo: float, hi: float, num_levels: int) -> int:
    """Clamp into [lo, hi] and map linearly onto {0, ..., num_levels-1}."""
    if lo >= hi:
        raise ValueError(f"degenerate range [{lo}, {hi}]")
    value = min(max(value, lo), hi)
    idx = int((value - lo) / (hi - lo) * num_levels)
    return min(idx, num_levels - 1)


def _quantize_rows(codebooks: Codebooks, values: np.ndarray) -> np.ndarray:
    lo, hi = codebooks.feature_min, codebooks.feature_max
    span = hi - lo
    ok = span > 0
    clipped = np.clip(values, lo, hi)
    with np.errstate(invalid="ignore", divide="ignore"):
        idx = ((clipped - lo) / span * codebooks.num_levels).astype(np.int64)
    idx = np.clip(idx, 0, codebooks.num_levels - 1)
    return np.where(ok, idx, 0)


def encode_window(features, codebooks: Codebooks) -> Hypervector:
    """Encode one feature vector; majority ties break from the codebook seed."""
    features = np.asarray(features, dtype=np.float64)
    if features.shape != (codebooks.num_features,):
        raise ValueError(
            f"expected {codebooks.num_features} features, got shape {features.shape}"
        )
    return encode_windows(features[None, :], codebooks)[0]


def encode_windows(values, codebooks: Codebooks) -> list:
    """Encode a (windows, features) matrix; returns one Hypervector per row.

    Bit-exact equal to bundling bind(id[f], level[q(x[f])]) per row with
    the codebook seed as the tie-break seed.
    """
    if not codebooks.is_fitted:
        raise ValueError("codebooks have no fitted feature ranges; call fit_ranges")
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or values.shape[1] != codebooks.num_features:
        raise ValueError(
            f"expected (windows, {codebooks.num_features}) matrix, got {values.shape}"
        )
    _, _, total, signed = codebooks.unpacked_bits()
    q = _quantize_rows(codebooks, values)
    nwin, nfeat = q.shape
    dim, nlev = codebooks.dim, codebooks.num_levels
    block = dim // (2 * (nlev - 1))
    # level[q] = level[0] ^ (ones on [0, q*block)), so within flip block j the
    # bound bit count is base_count + sum over features with q > j of +-1;
    # that inner sum is a (windows x features) @ (features x block) product.
    counts = np.empty((nwin, dim), dtype=np.int32)
    counts[:, (nlev - 1) * block :] = total[(nlev - 1) * block :]
    for j in range(nlev - 1):
        sel = slice(j * block, (j + 1) * block)
        above = (q > j).astype(np.float32)
        counts[:, sel] = total[sel] + (above @ signed[:, sel]).astype(np.int32)
    bits = (2 * counts > nfeat).astype(np.uint8)
    tied = 2 * counts == nfeat
    if tied.any():
        tie_bits = tie_break_vector(codebooks.seed, codebooks.dim).to_bools()
        bits = np.where(tied, tie_bits[None, :], bits)
    return [Hypervector.from_bools(row) for row in bits]
