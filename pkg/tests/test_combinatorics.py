"""Tests for search spaces, dictionary builders, embeddings, and the
combinatorial oracles (coherence, cardinality bound, exhaustive enumeration).
"""

import json
import math

import numpy as np
import pytest

from bodikit.combinatorics import (
    Dictionary,
    DictionaryKind,
    Point,
    SearchSpace,
    binary_wavelet_matrix,
    build_diverse_random_binary,
    build_diverse_random_categorical,
    build_naive_random,
    build_wavelet_dictionary,
    cardinality_bound,
    coherence_mu,
    embed,
    embed_affine,
    embed_many,
    enumerate_embedded_cardinality,
    gaussian_projection_cardinality,
    hamming_distance,
    projection_cardinality,
    sequency,
)
from bodikit.exceptions import (
    CoherenceUndefinedError,
    DimensionError,
    EnumerationTooLargeError,
    UnsupportedSpaceError,
)


class TestSearchSpace:
    def test_binary_factory(self):
        space = SearchSpace.binary(5)
        assert space.cardinalities == (2, 2, 2, 2, 2)
        assert space.is_binary
        assert not space.has_continuous
        assert space.dim == 5
        assert space.discrete_size() == 32

    def test_discrete_size_is_exact_for_large_spaces(self):
        space = SearchSpace.binary(100)
        assert space.discrete_size() == 2 ** 100

    def test_categorical_size(self):
        space = SearchSpace(cardinalities=(3, 4, 2))
        assert space.discrete_size() == 24
        assert not space.is_binary

    def test_mixed_space(self):
        space = SearchSpace(
            cardinalities=(2, 2), continuous_bounds=((-1.0, 1.0), (0.0, 5.0))
        )
        assert space.has_continuous
        assert space.n_continuous == 2

    def test_sampling_respects_cardinalities(self):
        space = SearchSpace(cardinalities=(2, 5, 3))
        rng = np.random.default_rng(0)
        draws = space.sample_discrete(rng, size=500)
        assert draws.shape == (500, 3)
        for j, tau in enumerate(space.cardinalities):
            assert draws[:, j].min() >= 0
            assert draws[:, j].max() == tau - 1

    def test_sample_point_mixed(self):
        space = SearchSpace(cardinalities=(2, 2), continuous_bounds=((0.0, 2.0),))
        point = space.sample(np.random.default_rng(3))
        assert isinstance(point, Point)
        assert len(point.discrete) == 2
        assert 0.0 <= point.continuous[0] <= 2.0

    def test_validate_discrete_rejects_out_of_range(self):
        space = SearchSpace(cardinalities=(2, 3))
        with pytest.raises(ValueError):
            space.validate_discrete(np.array([0, 3]))
        with pytest.raises(ValueError):
            space.validate_discrete(np.array([-1, 0]))

    def test_invalid_constructions(self):
        with pytest.raises(ValueError):
            SearchSpace(cardinalities=())
        with pytest.raises(ValueError):
            SearchSpace(cardinalities=(1, 2))
        with pytest.raises(ValueError):
            SearchSpace(cardinalities=(2,), continuous_bounds=((1.0, 0.0),))

    def test_normalize_continuous(self):
        space = SearchSpace(
            cardinalities=(2,), continuous_bounds=((-1.0, 1.0), (0.0, 4.0))
        )
        out = space.normalize_continuous(np.array([0.0, 1.0]))
        np.testing.assert_allclose(out, [0.5, 0.25])


class TestHammingAndEmbedding:
    def test_hamming_distance_examples(self):
        assert hamming_distance([0, 0, 1], [0, 1, 1]) == 1
        assert hamming_distance([0, 1], [0, 1]) == 0
        assert hamming_distance([0, 0, 0, 0], [1, 1, 1, 1]) == 4

    def test_embed_small_example(self):
        # rows: (0,0), (1,1), (1,0); query (1,0) has distances 1, 1, 0
        dictionary = Dictionary.explicit([[0, 0], [1, 1], [1, 0]])
        np.testing.assert_array_equal(embed(dictionary, [1, 0]), [1.0, 1.0, 0.0])

    def test_embedding_of_own_rows_has_zero_diagonal(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            d = int(rng.integers(2, 30))
            m = int(rng.integers(1, 12))
            dictionary = Dictionary.explicit(rng.integers(0, 2, size=(m, d)))
            for i in range(m):
                assert embed(dictionary, dictionary.rows[i])[i] == 0.0

    def test_embed_many_matches_single(self):
        rng = np.random.default_rng(11)
        dictionary = Dictionary.explicit(rng.integers(0, 2, size=(6, 9)))
        Z = rng.integers(0, 2, size=(40, 9))
        batch = embed_many(dictionary, Z)
        assert batch.shape == (40, 6)
        for k in range(40):
            np.testing.assert_array_equal(batch[k], embed(dictionary, Z[k]))

    def test_affine_identity_random(self):
        """The matrix form (d - sign(A) @ sign(z)) / 2 reproduces rowwise
        Hamming distances exactly, for every dictionary and query."""
        rng = np.random.default_rng(2024)
        for _ in range(300):
            d = int(rng.integers(1, 65))
            m = int(rng.integers(1, 33))
            dictionary = Dictionary.explicit(rng.integers(0, 2, size=(m, d)))
            z = rng.integers(0, 2, size=d)
            np.testing.assert_array_equal(
                embed(dictionary, z), embed_affine(dictionary, z)
            )

    def test_affine_rejects_categorical_rows(self):
        dictionary = Dictionary.explicit([[0, 2], [1, 0]])
        with pytest.raises(UnsupportedSpaceError):
            embed_affine(dictionary, [0, 1])

    def test_embed_dimension_mismatch(self):
        dictionary = Dictionary.explicit([[0, 1, 0]])
        with pytest.raises(DimensionError):
            embed(dictionary, [0, 1])

    def test_gaussian_kernel_of_embedding_is_hamming_rbf(self):
        # exp(-2 h(z, z')) == exp(-||sign(z) - sign(z')||^2 / 2)
        rng = np.random.default_rng(5)
        for _ in range(50):
            d = int(rng.integers(1, 40))
            z1 = rng.integers(0, 2, size=d)
            z2 = rng.integers(0, 2, size=d)
            h = hamming_distance(z1, z2)
            sq = float(np.sum((2.0 * z1 - 1 - (2.0 * z2 - 1)) ** 2))
            np.testing.assert_allclose(
                math.exp(-2.0 * h), math.exp(-sq / 2.0), rtol=1e-12
            )


class TestDictionaryContainer:
    def test_rows_are_read_only(self):
        dictionary = Dictionary.explicit([[0, 1], [1, 0]])
        with pytest.raises(ValueError):
            dictionary.rows[0, 0] = 1

    def test_signed_form(self):
        dictionary = Dictionary.explicit([[0, 1], [1, 1]])
        np.testing.assert_array_equal(dictionary.signed(), [[-1, 1], [1, 1]])

    def test_signed_rejects_categorical(self):
        dictionary = Dictionary.explicit([[0, 3]])
        assert not dictionary.is_binary
        with pytest.raises(UnsupportedSpaceError):
            dictionary.signed()

    def test_json_round_trip(self):
        original = build_diverse_random_binary(10, 6, seed=42)
        doc = original.to_json()
        assert set(doc) == {"kind", "seed", "m", "d", "rows"}
        restored = Dictionary.from_json(json.loads(json.dumps(doc)))
        np.testing.assert_array_equal(restored.rows, original.rows)
        assert restored.kind == original.kind
        assert restored.seed == original.seed

    def test_from_json_rejects_shape_mismatch(self):
        doc = {"kind": "explicit", "seed": 0, "m": 2, "d": 3, "rows": [[0, 1, 0]]}
        with pytest.raises(ValueError):
            Dictionary.from_json(doc)


class TestDiverseRandomBuilders:
    def test_binary_determinism(self):
        a = build_diverse_random_binary(20, 16, seed=9)
        b = build_diverse_random_binary(20, 16, seed=9)
        np.testing.assert_array_equal(a.rows, b.rows)
        c = build_diverse_random_binary(20, 16, seed=10)
        assert not np.array_equal(a.rows, c.rows)

    def test_binary_shape_and_kind(self):
        dictionary = build_diverse_random_binary(12, 5, seed=0)
        assert dictionary.rows.shape == (5, 12)
        assert dictionary.kind == DictionaryKind.DIVERSE_RANDOM_BINARY
        assert dictionary.is_binary

    def test_binary_row_density_spread_exceeds_naive(self):
        """Per-row Bernoulli rates drawn uniformly give a much wider spread of
        row densities than iid fair coin flips."""
        d, m = 1000, 256
        diverse_stds, naive_stds = [], []
        for seed in range(5):
            div = build_diverse_random_binary(d, m, seed=seed)
            nai = build_naive_random(SearchSpace.binary(d), m, seed=seed)
            diverse_stds.append(np.std(div.rows.mean(axis=1)))
            naive_stds.append(np.std(nai.rows.mean(axis=1)))
        assert np.mean(diverse_stds) > 5.0 * np.mean(naive_stds)

    def test_categorical_respects_cardinalities(self):
        space = SearchSpace(cardinalities=(3, 5, 2, 4))
        dictionary = build_diverse_random_categorical(space, 64, seed=1)
        assert dictionary.rows.shape == (64, 4)
        assert dictionary.kind == DictionaryKind.DIVERSE_RANDOM_CATEGORICAL
        for j, tau in enumerate(space.cardinalities):
            col = dictionary.rows[:, j]
            assert col.min() >= 0 and col.max() < tau

    def test_categorical_rows_skew_toward_few_categories(self):
        # the shared weight vector concentrates each row on a handful of
        # categories, so within-row repeats are far above the uniform rate
        space = SearchSpace(cardinalities=(8,) * 30)
        dictionary = build_diverse_random_categorical(space, 200, seed=3)
        top_fracs = []
        for row in dictionary.rows:
            _, counts = np.unique(row, return_counts=True)
            top_fracs.append(counts.max() / row.size)
        naive = build_naive_random(space, 200, seed=3)
        naive_fracs = []
        for row in naive.rows:
            _, counts = np.unique(row, return_counts=True)
            naive_fracs.append(counts.max() / row.size)
        assert np.mean(top_fracs) > np.mean(naive_fracs) + 0.1

    def test_naive_binary_space_gives_binary_rows(self):
        dictionary = build_naive_random(SearchSpace.binary(9), 7, seed=2)
        assert dictionary.is_binary
        assert dictionary.kind == DictionaryKind.NAIVE_RANDOM

    def test_builders_reject_bad_sizes(self):
        with pytest.raises(ValueError):
            build_diverse_random_binary(0, 4, seed=0)
        with pytest.raises(ValueError):
            build_diverse_random_binary(4, 0, seed=0)


class TestWaveletMatrix:
    def test_base_case_2(self):
        np.testing.assert_array_equal(binary_wavelet_matrix(2), [[1, 1], [1, 0]])

    def test_base_case_4(self):
        expected = [[1, 1, 1, 1], [1, 0, 0, 0], [1, 0, 1, 1], [1, 0, 1, 0]]
        np.testing.assert_array_equal(binary_wavelet_matrix(4), expected)

    def test_size_8_golden(self):
        expected = [
            [1, 1, 1, 1, 1, 1, 1, 1],
            [1, 1, 1, 1, 1, 1, 0, 0],
            [1, 1, 0, 0, 0, 0, 1, 1],
            [1, 1, 0, 1, 1, 1, 0, 0],
            [1, 1, 0, 1, 0, 0, 1, 1],
            [1, 1, 0, 1, 0, 1, 0, 0],
            [1, 0, 1, 0, 1, 0, 1, 1],
            [1, 0, 1, 0, 1, 0, 1, 0],
        ]
        np.testing.assert_array_equal(binary_wavelet_matrix(8), expected)

    def test_sequency_ordering(self):
        for n in (2, 4, 6, 8, 10, 16, 32):
            matrix = binary_wavelet_matrix(n)
            assert matrix.shape == (n, n)
            assert [sequency(row) for row in matrix] == list(range(n))

    def test_rows_are_distinct(self):
        for n in (2, 4, 6, 8, 12, 20):
            matrix = binary_wavelet_matrix(n)
            assert len({row.tobytes() for row in matrix}) == n

    def test_first_row_all_ones_first_column_all_ones(self):
        for n in (2, 4, 6, 8, 10):
            matrix = binary_wavelet_matrix(n)
            assert matrix[0].all()
            assert matrix[:, 0].all()

    def test_rejects_odd_or_small(self):
        for n in (0, 1, 3, 5, 7):
            with pytest.raises(ValueError):
                binary_wavelet_matrix(n)

    def test_sequency_examples(self):
        assert sequency(np.array([1, 1, 1, 1])) == 0
        assert sequency(np.array([1, 0, 1, 0])) == 3
        assert sequency(np.array([1, 1, 0, 0])) == 1


class TestWaveletDictionary:
    def test_rows_come_from_wavelet_matrix(self):
        # with d equal to the padded size every row must literally be a
        # wavelet matrix row
        matrix = binary_wavelet_matrix(8)
        matrix_rows = {row.tobytes() for row in matrix}
        for seed in range(10):
            dictionary = build_wavelet_dictionary(8, 6, seed=seed)
            assert dictionary.rows.shape == (6, 8)
            for row in dictionary.rows:
                assert row.astype(matrix.dtype).tobytes() in matrix_rows

    def test_m_at_most_padded_size_gives_distinct_rows(self):
        dictionary = build_wavelet_dictionary(16, 16, seed=4)
        assert len({row.tobytes() for row in dictionary.rows}) == 16

    def test_oversampling_allows_repeats(self):
        dictionary = build_wavelet_dictionary(4, 11, seed=0)
        assert dictionary.rows.shape == (11, 4)
        # first padded-size rows are a permutation, so still distinct
        assert len({row.tobytes() for row in dictionary.rows[:4]}) == 4

    def test_identity_order_reachable(self):
        # row selection is a uniform permutation when m equals the padded
        # size; some seed below 200 must produce the identity order
        target = binary_wavelet_matrix(4)
        found = None
        for seed in range(200):
            dictionary = build_wavelet_dictionary(4, 4, seed=seed)
            if np.array_equal(dictionary.rows, target):
                found = seed
                break
        assert found is not None

    def test_non_power_of_two_d_subselects_columns(self):
        dictionary = build_wavelet_dictionary(11, 8, seed=1)
        assert dictionary.rows.shape == (8, 11)
        assert dictionary.is_binary

    def test_determinism(self):
        a = build_wavelet_dictionary(13, 9, seed=6)
        b = build_wavelet_dictionary(13, 9, seed=6)
        np.testing.assert_array_equal(a.rows, b.rows)
        assert a.kind == DictionaryKind.BINARY_WAVELET


class TestCoherence:
    def test_complement_pair(self):
        dictionary = Dictionary.explicit([[0, 0, 1, 1], [1, 1, 0, 0]])
        assert coherence_mu(dictionary) == 4

    def test_half_distance_pair(self):
        dictionary = Dictionary.explicit([[0, 0, 0, 0], [0, 0, 1, 1]])
        assert coherence_mu(dictionary) == 2

    def test_duplicate_rows_give_mu_d(self):
        dictionary = Dictionary.explicit([[0, 1, 0, 1, 1], [0, 1, 0, 1, 1]])
        assert coherence_mu(dictionary) == 5

    def test_matches_double_loop_reference(self):
        def reference_mu(rows):
            m, d = rows.shape
            best = 0
            for i in range(m):
                for j in range(m):
                    if i == j:
                        continue
                    h = int(np.sum(rows[i] != rows[j]))
                    best = max(best, max(h, d - h))
            return best

        rng = np.random.default_rng(31)
        for _ in range(60):
            d = int(rng.integers(1, 13))
            m = int(rng.integers(2, 9))
            rows = rng.integers(0, 2, size=(m, d))
            assert coherence_mu(Dictionary.explicit(rows)) == reference_mu(rows)

    def test_bounds_hold(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            d = int(rng.integers(1, 20))
            m = int(rng.integers(2, 10))
            mu = coherence_mu(Dictionary.explicit(rng.integers(0, 2, size=(m, d))))
            assert math.ceil(d / 2) <= mu <= d

    def test_single_row_raises(self):
        with pytest.raises(CoherenceUndefinedError):
            coherence_mu(Dictionary.explicit([[0, 1, 0]]))

    def test_categorical_rows_raise(self):
        with pytest.raises(UnsupportedSpaceError):
            coherence_mu(Dictionary.explicit([[0, 2], [1, 0]]))


class TestCardinalityBound:
    def test_single_row_is_d_plus_one(self):
        dictionary = Dictionary.explicit([[0, 1, 0, 1, 1, 0, 1]])
        assert cardinality_bound(dictionary) == 8
        assert enumerate_embedded_cardinality(dictionary) == 8

    def test_complement_pair_bound_is_tight(self):
        dictionary = Dictionary.explicit([[0, 0, 1, 1], [1, 1, 0, 0]])
        assert cardinality_bound(dictionary) == 5
        assert enumerate_embedded_cardinality(dictionary) == 5

    def test_half_distance_pair(self):
        # mu = 2, d = 4: bound (mu+1)(d+1-mu) = 9
        dictionary = Dictionary.explicit([[0, 0, 0, 0], [0, 0, 1, 1]])
        assert cardinality_bound(dictionary) == 9

    def test_odd_m_takes_extra_factor(self):
        rows = [[0, 0, 0, 0], [0, 0, 1, 1], [1, 1, 1, 1]]
        dictionary = Dictionary.explicit(rows)
        mu = coherence_mu(dictionary)
        expected = ((mu + 1) * (4 + 1 - mu)) ** 1 * 5 ** 1
        assert cardinality_bound(dictionary) == expected

    def test_bound_dominates_enumeration(self):
        """Random dictionaries of every kind never exceed the bound."""
        rng = np.random.default_rng(99)
        space_cache = {}
        for trial in range(100):
            d = int(rng.integers(1, 11))
            m = int(rng.integers(1, 5))
            pick = trial % 3
            if pick == 0:
                dictionary = Dictionary.explicit(rng.integers(0, 2, size=(m, d)))
            elif pick == 1:
                dictionary = build_diverse_random_binary(
                    d, m, seed=int(rng.integers(0, 10000))
                )
            else:
                dictionary = build_wavelet_dictionary(
                    d, m, seed=int(rng.integers(0, 10000))
                )
            assert enumerate_embedded_cardinality(dictionary) <= cardinality_bound(
                dictionary
            )

    def test_bound_is_python_int_and_huge(self):
        dictionary = build_diverse_random_binary(60, 40, seed=0)
        bound = cardinality_bound(dictionary)
        assert isinstance(bound, int)
        assert bound > 2 ** 60


class TestEnumeration:
    def test_small_exact_values(self):
        # a single all-zeros row embeds to popcount, giving d+1 values
        dictionary = Dictionary.explicit([[0, 0, 0]])
        assert enumerate_embedded_cardinality(dictionary) == 4

    def test_identity_like_rows(self):
        dictionary = Dictionary.explicit([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
        # 2^3 = 8 inputs, count distinct embedded triples directly
        seen = set()
        for code in range(8):
            z = [(code >> k) & 1 for k in range(3)]
            seen.add(tuple(embed(dictionary, z)))
        assert enumerate_embedded_cardinality(dictionary) == len(seen)

    def test_refuses_oversized_spaces(self):
        dictionary = build_diverse_random_binary(30, 4, seed=0)
        with pytest.raises(EnumerationTooLargeError):
            enumerate_embedded_cardinality(dictionary)

    def test_rejects_categorical(self):
        with pytest.raises(UnsupportedSpaceError):
            enumerate_embedded_cardinality(Dictionary.explicit([[0, 2]]))


class TestGaussianProjection:
    def test_d_10_hits_full_cardinality(self):
        assert gaussian_projection_cardinality(10, seed=0) == 1024

    def test_d_1(self):
        assert gaussian_projection_cardinality(1, seed=0) == 2

    def test_many_seeds_always_full(self):
        for seed in range(25):
            assert gaussian_projection_cardinality(8, seed=seed) == 256

    def test_all_ones_row_collapses(self):
        # sum of signs takes d+1 values only
        assert projection_cardinality(np.ones(4)) == 5
        assert projection_cardinality(np.ones(7)) == 8

    def test_rejects_oversized(self):
        with pytest.raises(EnumerationTooLargeError):
            projection_cardinality(np.ones(25))
