"""Oracles for the structural guarantees behind the Hamming embedding.

Three facts about binary dictionaries are made executable here:

* the embedding is an affine map of signed coordinates (checked through
  :func:`bodikit.combinatorics.dictionaries.embed_affine`),
* a single Gaussian anchor row keeps all 2^d inputs distinguishable
  (:func:`gaussian_projection_cardinality`),
* the number of distinct embedding vectors is capped by a coherence-based
  bound (:func:`coherence_mu`, :func:`cardinality_bound`), which the
  brute-force counter :func:`enumerate_embedded_cardinality` can certify on
  small spaces.
"""

from __future__ import annotations

import numpy as np

from ..exceptions import (
    CoherenceUndefinedError,
    EnumerationTooLargeError,
    UnsupportedSpaceError,
)
from .dictionaries import Dictionary

ENUMERATION_MAX_D = 24
PROJECTION_MAX_D = 20
DUPLICATE_RTOL = 1e-9


def coherence_mu(dictionary: Dictionary) -> int:
    """Dictionary coherence: worst-case pairwise (anti-)similarity.

    mu = max over ordered pairs i != j of max(h(a_i, a_j), h(~a_i, a_j)),
    where ~a flips every bit.  The max runs over *distinct* rows only;
    including i = j would pin mu at d via h(~a_i, a_i) = d.  Satisfies
    ceil(d/2) <= mu <= d, with mu = d whenever two rows are equal or
    complementary.
    """
    if not dictionary.is_binary:
        raise UnsupportedSpaceError("coherence is defined for binary dictionaries")
    if dictionary.m < 2:
        raise CoherenceUndefinedError("coherence needs at least two rows")
    signed = dictionary.signed()
    gram = signed @ signed.T  # <a_bar_i, a_bar_j> = d - 2 h(a_i, a_j)
    h = (dictionary.d - gram) // 2
    pair = np.maximum(h, dictionary.d - h)
    mask = ~np.eye(dictionary.m, dtype=bool)
    return int(pair[mask].max())


def cardinality_bound(dictionary: Dictionary) -> int:
    """Upper bound on the number of distinct embedding vectors.

    For m = 1 the embedding takes exactly the d+1 values 0..d.  For m >= 2,
    pairing rows shows at most (mu+1)(d+1-mu) joint values per pair, giving

        |S_A| <= [(mu+1)(d+1-mu)]^floor(m/2) * (d+1)^(m mod 2)

    with mu from :func:`coherence_mu`.  Exact Python integers throughout, so
    large m and d never overflow.
    """
    if not dictionary.is_binary:
        raise UnsupportedSpaceError("cardinality bound is defined for binary dictionaries")
    d = dictionary.d
    if dictionary.m == 1:
        return d + 1
    mu = coherence_mu(dictionary)
    pair_count = (mu + 1) * (d + 1 - mu)
    return pair_count ** (dictionary.m // 2) * (d + 1) ** (dictionary.m % 2)


def enumerate_embedded_cardinality(dictionary: Dictionary) -> int:
    """Exact |S_A| by enumerating all 2^d binary inputs (guarded at d <= 24)."""
    if not dictionary.is_binary:
        raise UnsupportedSpaceError("enumeration runs over binary inputs")
    d = dictionary.d
    if d > ENUMERATION_MAX_D:
        raise EnumerationTooLargeError(
            f"2^{d} inputs exceed the enumeration guard (d <= {ENUMERATION_MAX_D})"
        )
    signed_rows = dictionary.signed()
    seen: set[bytes] = set()
    total = 1 << d
    chunk = 1 << 15
    bit_cols = np.arange(d, dtype=np.int64)
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        zbar = (((codes[:, None] >> bit_cols[None, :]) & 1) * 2 - 1)
        # 2 phi = d - Zbar @ Abar^T; store phi rows compactly (phi <= d <= 24 fits a byte)
        phi2 = d - zbar @ signed_rows.T
        phi = (phi2 // 2).astype(np.uint8)
        for row in phi:
            seen.add(row.tobytes())
    return len(seen)


def projection_cardinality(a) -> int:
    """Count distinct values of <a, zbar> over all signed binary inputs.

    Duplicate detection uses a relative tolerance of 1e-9: exact ties are a
    measure-zero event for continuous ``a``, but finite precision needs a
    cutoff, and adversarial integer vectors (e.g. all-ones) collide exactly.
    """
    vec = np.asarray(a, dtype=np.float64)
    if vec.ndim != 1 or vec.shape[0] < 1:
        raise UnsupportedSpaceError(f"projection needs a 1-D vector, got shape {vec.shape}")
    d = vec.shape[0]
    if d > PROJECTION_MAX_D:
        raise EnumerationTooLargeError(
            f"2^{d} inputs exceed the enumeration guard (d <= {PROJECTION_MAX_D})"
        )
    codes = np.arange(1 << d, dtype=np.int64)
    zbar = (((codes[:, None] >> np.arange(d, dtype=np.int64)[None, :]) & 1) * 2 - 1)
    values = np.sort(zbar @ vec)
    if values.shape[0] == 1:
        return 1
    gaps = np.diff(values)
    scale = np.maximum(1.0, np.maximum(np.abs(values[1:]), np.abs(values[:-1])))
    return 1 + int(np.count_nonzero(gaps > DUPLICATE_RTOL * scale))


def gaussian_projection_cardinality(d: int, seed: int) -> int:
    """|{<a, zbar>}| for one Gaussian row a ~ N(0, I_d); 2^d almost surely."""
    if d < 1:
        raise UnsupportedSpaceError(f"need d >= 1, got {d}")
    if d > PROJECTION_MAX_D:
        raise EnumerationTooLargeError(
            f"2^{d} inputs exceed the enumeration guard (d <= {PROJECTION_MAX_D})"
        )
    rng = np.random.default_rng(seed)
    return projection_cardinality(rng.standard_normal(d))
