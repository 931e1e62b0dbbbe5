"""Binary hypervector algebra.

The computational kernel of the package:

    - random_hypervector(seed, tag, dim): reproducible i.i.d. fair-coin vector
    - bind(a, b):          per-dimension XOR (self-inverse, distance preserving)
    - hamming_distance:    normalized Hamming distance in [0, 1]
    - similarity:          1 - hamming_distance (the only similarity used here)
    - Accumulator:         signed bipolar sum for weighted bundling/merging
    - bundle(vectors):     majority-vote superposition

Vectors are stored bit-packed (numpy uint8, little bit order), so binding
and distance run as byte-wise XOR plus popcount. Accumulation maps bits to
the bipolar domain (0 -> -1, 1 -> +1) so weighted subtraction is well
defined, and binarizes back by sign. Ties (an exactly-zero accumulator
entry) are resolved from a deterministic seed-derived tie-break vector
rather than a fixed bit, to avoid systematic bias for even bundle counts.

Randomness comes from numpy's Philox counter-based generator keyed by
(seed, tag), which makes every vector a pure function of its inputs,
stable across runs and platforms.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidDimensionError

MIN_DIM = 64

# Tag namespace for derived vectors: tie-break vectors live far away from
# the small integer tags used for codebook item vectors.
TIE_BREAK_TAG_BASE = 1 << 32


def _packed_size(dim: int) -> int:
    return (dim + 7) // 8


def _check_dim(dim: int) -> None:
    if dim < MIN_DIM:
        raise InvalidDimensionError(
            f"dimension must be >= {MIN_DIM}, got {dim}"
        )


class Hypervector:
    """A dense binary vector of `dim` bits, packed into uint8 bytes.

    Bit i of the vector is bit (i % 8) of byte (i // 8) (little bit
    order). Padding bits beyond `dim` in the last byte are always zero,
    so byte-wise popcounts and equality are exact.
    """

    __slots__ = ("dim", "bits")

    def __init__(self, bits: np.ndarray, dim: int):
        _check_dim(dim)
        bits = np.ascontiguousarray(bits, dtype=np.uint8)
        if bits.shape != (_packed_size(dim),):
            raise ValueError(
                f"packed buffer has {bits.shape} bytes, expected ({_packed_size(dim)},)"
            )
        self.bits = bits
        self.dim = dim

    @classmethod
    def from_bools(cls, values) -> "Hypervector":
        """Build from a {0,1} (or boolean) sequence of length dim."""
        arr = np.asarray(values)
        if arr.ndim != 1:
            raise ValueError("expected a 1-D bit sequence")
        return cls(np.packbits(arr.astype(bool), bitorder="little"), arr.shape[0])

    def to_bools(self) -> np.ndarray:
        """Unpack to a uint8 {0,1} array of length dim."""
        return np.unpackbits(self.bits, count=self.dim, bitorder="little")

    def to_bipolar(self) -> np.ndarray:
        """Unpack to a float64 {-1,+1} array of length dim."""
        return self.to_bools().astype(np.float64) * 2.0 - 1.0

    def __eq__(self, other) -> bool:
        if not isinstance(other, Hypervector):
            return NotImplemented
        return self.dim == other.dim and bool(np.array_equal(self.bits, other.bits))

    def __hash__(self):
        return hash((self.dim, self.bits.tobytes()))

    def __repr__(self) -> str:
        ones = int(np.bitwise_count(self.bits).sum())
        return f"Hypervector(dim={self.dim}, ones={ones})"


def _philox(seed: int, tag: int) -> np.random.Generator:
    key = np.array([seed % (1 << 64), tag % (1 << 64)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def random_hypervector(seed: int, tag: int, dim: int) -> Hypervector:
    """Deterministic random vector: each bit an independent fair coin.

    The same (seed, tag, dim) always yields the identical vector; any two
    distinct (seed, tag) pairs give nearly orthogonal vectors.
    """
    _check_dim(dim)
    raw = _philox(seed, tag).integers(0, 256, size=_packed_size(dim), dtype=np.uint8)
    tail = dim % 8
    if tail:
        raw[-1] &= (1 << tail) - 1
    return Hypervector(raw, dim)


def _require_same_dim(a: Hypervector, b: Hypervector) -> None:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} != {b.dim}")


def bind(a: Hypervector, b: Hypervector) -> Hypervector:
    """Per-dimension XOR. Self-inverse: bind(bind(a, b), b) == a."""
    _require_same_dim(a, b)
    return Hypervector(np.bitwise_xor(a.bits, b.bits), a.dim)


def complement(v: Hypervector) -> Hypervector:
    """Flip every bit (padding stays zero)."""
    out = np.bitwise_not(v.bits)
    tail = v.dim % 8
    if tail:
        out[-1] &= (1 << tail) - 1
    return Hypervector(out, v.dim)


def hamming_distance(a: Hypervector, b: Hypervector) -> float:
    """Fraction of differing dimensions, in [0, 1]."""
    _require_same_dim(a, b)
    diff = int(np.bitwise_count(np.bitwise_xor(a.bits, b.bits)).sum())
    return diff / a.dim


def similarity(a: Hypervector, b: Hypervector) -> float:
    """1 - hamming_distance; the similarity measure used throughout."""
    return 1.0 - hamming_distance(a, b)


def tie_break_vector(seed: int, dim: int) -> Hypervector:
    """The deterministic vector used to resolve exactly-tied dimensions."""
    return random_hypervector(seed, TIE_BREAK_TAG_BASE + dim, dim)


class Accumulator:
    """Signed per-dimension sum in the bipolar domain.

    Accumulating a vector with weight w adds w * (2*bit - 1) to each
    dimension, so negative weights subtract. `normalize` binarizes by
    sign, taking tied (exactly zero) dimensions from a seed-derived
    tie-break vector.
    """

    __slots__ = ("dim", "values", "total_weight")

    def __init__(self, dim: int):
        _check_dim(dim)
        self.dim = dim
        self.values = np.zeros(dim, dtype=np.float64)
        self.total_weight = 0.0

    @classmethod
    def from_vector(cls, v: Hypervector, weight: float = 1.0) -> "Accumulator":
        return cls(v.dim).add(v, weight)

    def add(self, v: Hypervector, weight: float = 1.0) -> "Accumulator":
        if v.dim != self.dim:
            raise ValueError(f"dimension mismatch: {v.dim} != {self.dim}")
        if not math.isfinite(weight):
            raise ValueError(f"weight must be finite, got {weight}")
        self.values += weight * v.to_bipolar()
        self.total_weight += weight
        return self

    def normalize(self, tie_break_seed: int = 0) -> Hypervector:
        """Sign-binarize: 1 where positive, 0 where negative, ties from seed."""
        bits = (self.values > 0).astype(np.uint8)
        tied = self.values == 0
        if tied.any():
            bits[tied] = tie_break_vector(tie_break_seed, self.dim).to_bools()[tied]
        return Hypervector.from_bools(bits)


def bundle(vectors, tie_break_seed: int = 0) -> Hypervector:
    """Majority-vote superposition of a non-empty list of vectors.

    Equivalent to unit-weight accumulation followed by `normalize`; ties
    (possible only for even counts) resolve from the tie-break seed.
    """
    vectors = list(vectors)
    if not vectors:
        raise ValueError("cannot bundle an empty list of vectors")
    dim = vectors[0].dim
    # Integer popcount path: sum of bits per dimension, then majority.
    counts = np.zeros(dim, dtype=np.int64)
    for v in vectors:
        if v.dim != dim:
            raise ValueError(f"dimension mismatch: {v.dim} != {dim}")
        counts += v.to_bools()
    n = len(vectors)
    bits = (2 * counts > n).astype(np.uint8)
    tied = 2 * counts == n
    if tied.any():
        bits[tied] = tie_break_vector(tie_break_seed, dim).to_bools()[tied]
    return Hypervector.from_bools(bits)


def pack_rows(vectors) -> np.ndarray:
    """Stack the packed bytes of uniform-dim vectors into an (N, bytes) array."""
    vectors = list(vectors)
    if not vectors:
        raise ValueError("no vectors to stack")
    dim = vectors[0].dim
    for v in vectors:
        if v.dim != dim:
            raise ValueError(f"dimension mismatch: {v.dim} != {dim}")
    return np.stack([v.bits for v in vectors])


def hamming_to_rows(rows: np.ndarray, v: Hypervector) -> np.ndarray:
    """Normalized Hamming distance from one vector to each packed row."""
    diff = np.bitwise_count(np.bitwise_xor(rows, v.bits[None, :]))
    return diff.sum(axis=1, dtype=np.int64) / v.dim
