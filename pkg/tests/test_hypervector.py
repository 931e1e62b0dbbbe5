"""Kernel tests: every packed-bit operation is checked against a naive
per-bit Python loop on small dimensions, plus the statistical properties
that make the algebra usable (near-orthogonality, bundle similarity)."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hdseizure.errors import InvalidDimensionError
from hdseizure.hypervector import (
    Accumulator,
    Hypervector,
    bind,
    bundle,
    complement,
    hamming_distance,
    hamming_to_rows,
    pack_rows,
    random_hypervector,
    similarity,
    tie_break_vector,
)


def naive_hamming(a, b):
    """Oracle: per-bit comparison loop."""
    xa, xb = a.to_bools(), b.to_bools()
    diff = 0
    for i in range(a.dim):
        if xa[i] != xb[i]:
            diff += 1
    return diff / a.dim


def naive_bind(a, b):
    return Hypervector.from_bools([int(x) ^ int(y) for x, y in zip(a.to_bools(), b.to_bools())])


def rv(seed, tag=0, dim=128):
    return random_hypervector(seed, tag, dim)


class TestRandomHypervector:
    def test_deterministic(self):
        a = random_hypervector(7, 0, 10000)
        b = random_hypervector(7, 0, 10000)
        assert a == b

    def test_tag_separates_streams(self):
        a = random_hypervector(7, 0, 10000)
        b = random_hypervector(7, 1, 10000)
        # 4 sigma with sigma = 0.5/sqrt(10000)
        assert abs(hamming_distance(a, b) - 0.5) < 0.02

    def test_bit_mean_fair(self):
        v = random_hypervector(123, 5, 10000)
        ones = 0
        for bit in v.to_bools():
            ones += int(bit)
        assert abs(ones / 10000 - 0.5) < 0.02

    def test_rejects_small_dim(self):
        with pytest.raises(InvalidDimensionError):
            random_hypervector(1, 0, 0)
        with pytest.raises(InvalidDimensionError):
            random_hypervector(1, 0, 63)

    def test_padding_bits_zero(self):
        # dim not a multiple of 8: tail bits of the last byte must be 0
        v = random_hypervector(3, 3, 67)
        assert v.bits[-1] >> (67 % 8) == 0


class TestBind:
    def test_self_inverse(self):
        v = rv(1)
        assert bind(v, v) == Hypervector.from_bools(np.zeros(v.dim, dtype=np.uint8))

    def test_involution(self):
        a, b = rv(1), rv(2)
        assert bind(bind(a, b), b) == a

    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            a = Hypervector.from_bools(rng.integers(0, 2, 256))
            b = Hypervector.from_bools(rng.integers(0, 2, 256))
            assert bind(a, b) == naive_bind(a, b)

    def test_preserves_distance(self):
        a, b, c = rv(1, dim=256), rv(2, dim=256), rv(3, dim=256)
        assert hamming_distance(bind(a, c), bind(b, c)) == naive_hamming(a, b)

    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            bind(rv(1, dim=128), rv(1, dim=256))


@given(st.integers(0, 2**32), st.integers(0, 2**32), st.integers(0, 2**32))
@settings(max_examples=30, deadline=None)
def test_bind_properties_hold_for_any_seeds(s1, s2, s3):
    a, b, c = rv(s1), rv(s2), rv(s3)
    assert bind(bind(a, b), b) == a
    assert hamming_distance(bind(a, c), bind(b, c)) == hamming_distance(a, b)


class TestHamming:
    def test_zero_on_self(self):
        v = rv(9)
        assert hamming_distance(v, v) == 0.0

    def test_one_on_complement(self):
        v = rv(9, dim=67)
        assert hamming_distance(v, complement(v)) == 1.0

    def test_matches_naive_oracle(self):
        a, b = rv(4, dim=128), rv(5, dim=128)
        assert hamming_distance(a, b) == naive_hamming(a, b)

    def test_similarity_is_one_minus_distance(self):
        a, b = rv(4), rv(5)
        assert similarity(a, b) == pytest.approx(1.0 - hamming_distance(a, b))

    def test_symmetric(self):
        a, b = rv(6), rv(7)
        assert hamming_distance(a, b) == hamming_distance(b, a)


class TestAccumulator:
    def test_single_vector_identity(self):
        v = rv(11)
        assert Accumulator.from_vector(v).normalize() == v

    def test_cancellation(self):
        v = rv(12)
        acc = Accumulator.from_vector(v, 1.0).add(v, -1.0)
        assert np.all(acc.values == 0)
        assert acc.total_weight == 0

    def test_bipolar_sum_matches_naive(self):
        vs = [rv(s, dim=64) for s in (1, 2, 3)]
        acc = Accumulator(64)
        for v in vs:
            acc.add(v)
        expect = np.zeros(64)
        for v in vs:
            for i, bit in enumerate(v.to_bools()):
                expect[i] += 1.0 if bit else -1.0
        np.testing.assert_array_equal(acc.values, expect)

    def test_rejects_nonfinite_weight(self):
        with pytest.raises(ValueError):
            Accumulator(64).add(rv(1, dim=64), float("nan"))

    def test_all_zero_normalizes_to_tie_vector(self):
        acc = Accumulator(128)
        assert acc.normalize(tie_break_seed=17) == tie_break_vector(17, 128)

    def test_majority_of_aab(self):
        a, b = rv(21, dim=64), rv(22, dim=64)
        acc = Accumulator(64).add(a).add(a).add(b)
        # per-dimension majority by hand
        expect = [1 if (2 * int(x) + int(y)) > 1 else 0 for x, y in zip(a.to_bools(), b.to_bools())]
        assert acc.normalize() == Hypervector.from_bools(expect)


class TestBundle:
    def test_bundle_of_one(self):
        v = rv(31)
        assert bundle([v]) == v

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            bundle([])

    def test_odd_count_matches_bruteforce_majority(self):
        rng = np.random.default_rng(1)
        for dim in (64, 128):
            for n in (3, 5, 7):
                vs = [Hypervector.from_bools(rng.integers(0, 2, dim)) for _ in range(n)]
                out = bundle(vs)
                for i in range(dim):
                    ones = sum(int(v.to_bools()[i]) for v in vs)
                    assert int(out.to_bools()[i]) == (1 if 2 * ones > n else 0)

    def test_even_count_ties_use_tie_vector(self):
        v = rv(41, dim=128)
        out = bundle([v, complement(v)], tie_break_seed=99)
        assert out == tie_break_vector(99, 128)

    def test_bundle_similar_to_constituents(self):
        vs = [rv(s, dim=10000) for s in range(5)]
        out = bundle(vs)
        sigma = 0.5 / np.sqrt(10000)
        for v in vs:
            assert hamming_distance(out, v) < 0.5 - 4 * sigma

    def test_equals_accumulate_then_normalize(self):
        vs = [rv(s, dim=128) for s in range(4)]
        acc = Accumulator(128)
        for v in vs:
            acc.add(v)
        assert bundle(vs, tie_break_seed=5) == acc.normalize(tie_break_seed=5)


class TestNearOrthogonality:
    def test_population_statistics(self):
        dists = []
        for i in range(1000):
            a = random_hypervector(1000 + i, 0, 10000)
            b = random_hypervector(1000 + i, 1, 10000)
            dists.append(hamming_distance(a, b))
        dists = np.asarray(dists)
        assert 0.49 <= dists.mean() <= 0.51
        assert dists.min() >= 0.45 and dists.max() <= 0.55


class TestBatchHelpers:
    def test_hamming_to_rows_matches_pairwise(self):
        vs = [rv(s, dim=256) for s in range(6)]
        probe = rv(99, dim=256)
        got = hamming_to_rows(pack_rows(vs), probe)
        expect = [hamming_distance(v, probe) for v in vs]
        np.testing.assert_allclose(got, expect)
