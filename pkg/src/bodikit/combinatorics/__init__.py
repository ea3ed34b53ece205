"""Search spaces, Hamming embeddings, dictionary builders, theory oracles."""

from .spaces import Point, SearchSpace
from .dictionaries import (
    Dictionary,
    DictionaryKind,
    binary_wavelet_matrix,
    build_diverse_random_binary,
    build_diverse_random_categorical,
    build_naive_random,
    build_wavelet_dictionary,
    embed,
    embed_affine,
    embed_many,
    hamming_distance,
    sequency,
)
from .theory import (
    cardinality_bound,
    coherence_mu,
    enumerate_embedded_cardinality,
    gaussian_projection_cardinality,
    projection_cardinality,
)

__all__ = [
    "Point",
    "SearchSpace",
    "Dictionary",
    "DictionaryKind",
    "binary_wavelet_matrix",
    "build_diverse_random_binary",
    "build_diverse_random_categorical",
    "build_naive_random",
    "build_wavelet_dictionary",
    "embed",
    "embed_affine",
    "embed_many",
    "hamming_distance",
    "sequency",
    "cardinality_bound",
    "coherence_mu",
    "enumerate_embedded_cardinality",
    "gaussian_projection_cardinality",
    "projection_cardinality",
]
