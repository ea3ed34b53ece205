"""Dictionaries of anchor points and Hamming-distance embeddings.

A dictionary is an ``m x d`` integer matrix ``A`` whose rows live in the same
discrete space as the optimization variables.  A point ``z`` is embedded as
the vector of Hamming distances to the rows,

    phi_A(z)[i] = hamming(a_i, z),

which maps a combinatorial domain into an ``m``-dimensional integer lattice
where standard smooth surrogates apply.  For binary spaces the embedding also
has an exact affine form in signed (+/-1) coordinates, which is what makes
the cardinality analysis in :mod:`.theory` tractable:

    2 * phi_A(z) = d * 1_m - signed(A) @ signed(z).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..exceptions import DimensionError, UnsupportedSpaceError
from .spaces import SearchSpace


class DictionaryKind(str, Enum):
    """How a dictionary's rows were generated."""

    DIVERSE_RANDOM_BINARY = "diverse-random-binary"
    DIVERSE_RANDOM_CATEGORICAL = "diverse-random-categorical"
    NAIVE_RANDOM = "naive-random"
    BINARY_WAVELET = "binary-wavelet"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class Dictionary:
    """Anchor rows plus the provenance needed to rebuild them.

    ``rows`` is an ``(m, d)`` int64 array, kept read-only.  ``seed`` is the
    seed the builder consumed (0 by convention for explicit dictionaries).
    """

    rows: np.ndarray
    kind: DictionaryKind
    seed: int

    def __post_init__(self):
        arr = np.asarray(self.rows)
        if arr.ndim != 2:
            raise DimensionError(f"dictionary rows must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DimensionError(f"dictionary needs m >= 1 and d >= 1, got shape {arr.shape}")
        if not np.issubdtype(arr.dtype, np.integer):
            if not np.all(arr == np.round(arr)):
                raise DimensionError("dictionary entries must be integers")
        arr = arr.astype(np.int64, copy=True)
        if np.any(arr < 0):
            raise DimensionError("dictionary entries must be nonnegative category indices")
        arr.setflags(write=False)
        object.__setattr__(self, "rows", arr)
        object.__setattr__(self, "kind", DictionaryKind(self.kind))

    @property
    def m(self) -> int:
        return self.rows.shape[0]

    @property
    def d(self) -> int:
        return self.rows.shape[1]

    @property
    def is_binary(self) -> bool:
        return bool(np.all(self.rows <= 1))

    def signed(self) -> np.ndarray:
        """Rows in +/-1 coordinates (binary dictionaries only)."""
        if not self.is_binary:
            raise UnsupportedSpaceError("signed form is defined for binary dictionaries only")
        return (2 * self.rows - 1).astype(np.int64)

    @classmethod
    def explicit(cls, rows, seed: int = 0) -> "Dictionary":
        return cls(rows=np.asarray(rows), kind=DictionaryKind.EXPLICIT, seed=seed)

    def to_json(self) -> dict:
        """Portable document: {kind, seed, m, d, rows}."""
        return {
            "kind": self.kind.value,
            "seed": int(self.seed),
            "m": self.m,
            "d": self.d,
            "rows": self.rows.tolist(),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Dictionary":
        required = {"kind", "seed", "m", "d", "rows"}
        if set(doc) != required:
            extra = set(doc) - required
            missing = required - set(doc)
            raise ValueError(
                f"dictionary document keys mismatch (extra={sorted(extra)}, missing={sorted(missing)})"
            )
        rows = np.asarray(doc["rows"], dtype=np.int64)
        if rows.ndim != 2 or rows.shape != (doc["m"], doc["d"]):
            raise DimensionError(
                f"rows shape {rows.shape} does not match declared (m, d) = ({doc['m']}, {doc['d']})"
            )
        return cls(rows=rows, kind=DictionaryKind(doc["kind"]), seed=int(doc["seed"]))


def hamming_distance(u, v) -> int:
    """Number of coordinates where two assignments differ."""
    a = np.asarray(u)
    b = np.asarray(v)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionError(f"hamming distance needs equal-length vectors, got {a.shape} and {b.shape}")
    return int(np.count_nonzero(a != b))


def embed(dictionary: Dictionary, z) -> np.ndarray:
    """Hamming embedding of one point: distances to every dictionary row."""
    zz = np.asarray(z, dtype=np.int64)
    if zz.ndim != 1 or zz.shape[0] != dictionary.d:
        raise DimensionError(
            f"point has shape {zz.shape}, dictionary expects length {dictionary.d}"
        )
    return (dictionary.rows != zz[None, :]).sum(axis=1).astype(np.float64)


def embed_many(dictionary: Dictionary, Z) -> np.ndarray:
    """Embed a batch: (k, d) points -> (k, m) distances."""
    zz = np.asarray(Z, dtype=np.int64)
    if zz.ndim != 2 or zz.shape[1] != dictionary.d:
        raise DimensionError(
            f"batch has shape {zz.shape}, dictionary expects (*, {dictionary.d})"
        )
    # (k, 1, d) vs (1, m, d); fine at the batch sizes used here
    return (zz[:, None, :] != dictionary.rows[None, :, :]).sum(axis=2).astype(np.float64)


def embed_affine(dictionary: Dictionary, z) -> np.ndarray:
    """Binary embedding through its exact affine form in signed coordinates.

    Returns the same vector as :func:`embed`, computed as
    ``(d - signed(A) @ signed(z)) / 2`` in exact integer arithmetic.
    """
    zz = np.asarray(z, dtype=np.int64)
    if zz.ndim != 1 or zz.shape[0] != dictionary.d:
        raise DimensionError(
            f"point has shape {zz.shape}, dictionary expects length {dictionary.d}"
        )
    if np.any((zz != 0) & (zz != 1)):
        raise UnsupportedSpaceError("affine embedding needs a binary point")
    signed_rows = dictionary.signed()  # raises UnsupportedSpaceError for non-binary rows
    zbar = 2 * zz - 1
    twice = dictionary.d - signed_rows @ zbar
    # parity guarantee: d - <a_bar, z_bar> is even for binary inputs
    return (twice // 2).astype(np.float64)


def build_diverse_random_binary(d: int, m: int, seed: int) -> Dictionary:
    """Binary anchors with per-row random density.

    Row ``i`` draws a bias ``theta_i ~ U(0,1)`` and then ``d`` independent
    Bernoulli(theta_i) entries, so the dictionary mixes sparse, balanced, and
    dense rows instead of concentrating near density one half.
    """
    if d < 1 or m < 1:
        raise DimensionError(f"need d >= 1 and m >= 1, got d={d}, m={m}")
    rng = np.random.default_rng(seed)
    thetas = rng.random(m)
    rows = (rng.random((m, d)) < thetas[:, None]).astype(np.int64)
    return Dictionary(rows=rows, kind=DictionaryKind.DIVERSE_RANDOM_BINARY, seed=seed)


def build_diverse_random_categorical(space: SearchSpace, m: int, seed: int) -> Dictionary:
    """Categorical anchors with per-row random category preferences.

    Each row draws one probability vector on the simplex over ``max_j tau_j``
    slots; each variable subsamples ``tau_j`` slots without replacement
    (kept in slot order, so the weights stay attached to their categories),
    renormalizes, and draws its category from those weights.  Binary spaces
    reduce to a per-row Bernoulli bias, mirroring the binary construction.
    """
    if m < 1:
        raise DimensionError(f"need m >= 1, got m={m}")
    rng = np.random.default_rng(seed)
    taus = space.cardinalities
    tau_max = max(taus)
    rows = np.empty((m, space.dim), dtype=np.int64)
    for i in range(m):
        e = rng.exponential(size=tau_max)
        theta = e / e.sum()
        for j, tau in enumerate(taus):
            idx = np.sort(rng.choice(tau_max, size=tau, replace=False))
            w = theta[idx]
            w = w / w.sum()
            rows[i, j] = rng.choice(tau, p=w)
    return Dictionary(rows=rows, kind=DictionaryKind.DIVERSE_RANDOM_CATEGORICAL, seed=seed)


def build_naive_random(space: SearchSpace, m: int, seed: int) -> Dictionary:
    """Anchors drawn uniformly over the discrete space (the baseline)."""
    if m < 1:
        raise DimensionError(f"need m >= 1, got m={m}")
    rng = np.random.default_rng(seed)
    taus = np.asarray(space.cardinalities, dtype=np.int64)
    rows = rng.integers(0, taus, size=(m, space.dim), dtype=np.int64)
    return Dictionary(rows=rows, kind=DictionaryKind.NAIVE_RANDOM, seed=seed)


def binary_wavelet_matrix(n: int) -> np.ndarray:
    """Square binary matrix of even order n whose rows sweep all sequencies.

    Base cases:

        n=2: [[1,1],
              [1,0]]

        n=4: [[1,1,1,1],
              [1,0,0,0],
              [1,0,1,1],
              [1,0,1,0]]

    For even n >= 6 the matrix is assembled from the order-(n-4) matrix B:

        top-left  (n-2)x(n-2): ones in the first two rows/columns, complement
                               of B in the rest
        top-right (n-2)x2:     rows alternate [1,1], [0,0]
        bottom    2x(n-2):     both rows [1,0,1,0,...]
        corner    2x2:         [[1,1],[1,0]]

    Rows come out ordered by sequency (adjacent-change count) 0..n-1.
    """
    if n < 2 or n % 2 != 0:
        raise DimensionError(f"order must be an even integer >= 2, got {n}")
    if n == 2:
        return np.array([[1, 1], [1, 0]], dtype=np.int64)
    if n == 4:
        return np.array([[1, 1, 1, 1], [1, 0, 0, 0], [1, 0, 1, 1], [1, 0, 1, 0]], dtype=np.int64)
    # iterate up from the base case with the same parity mod 4
    k = 2 if n % 4 == 2 else 4
    B = binary_wavelet_matrix(k)
    while k < n:
        k += 4
        top_left = np.ones((k - 2, k - 2), dtype=np.int64)
        top_left[2:, 2:] = 1 - B
        top_right = np.zeros((k - 2, 2), dtype=np.int64)
        top_right[0::2, :] = 1
        bottom_left = np.tile(np.arange(k - 2, dtype=np.int64) % 2 == 0, (2, 1)).astype(np.int64)
        corner = np.array([[1, 1], [1, 0]], dtype=np.int64)
        B = np.block([[top_left, top_right], [bottom_left, corner]])
    return B


def sequency(row) -> int:
    """Number of adjacent positions where a binary row changes value."""
    arr = np.asarray(row, dtype=np.int64)
    if arr.ndim != 1 or arr.shape[0] == 0:
        raise DimensionError(f"sequency needs a nonempty 1-D row, got shape {arr.shape}")
    if np.any((arr != 0) & (arr != 1)):
        raise UnsupportedSpaceError("sequency is defined for binary rows")
    return int(np.count_nonzero(arr[1:] != arr[:-1]))


def build_wavelet_dictionary(d: int, m: int, seed: int) -> Dictionary:
    """Sub-sampled rows (and, off powers of two, columns) of a wavelet matrix.

    The source matrix has order p, the smallest power of two >= max(d, 2).
    Columns are sub-sampled (sorted, so p == d keeps them in place) down to
    d; then m rows are drawn without replacement while m <= p, and with
    replacement for the overflow beyond one full permutation.
    """
    if d < 1 or m < 1:
        raise DimensionError(f"need d >= 1 and m >= 1, got d={d}, m={m}")
    p = 2
    while p < d:
        p *= 2
    B = binary_wavelet_matrix(p)
    rng = np.random.default_rng(seed)
    if d < p:
        cols = np.sort(rng.choice(p, size=d, replace=False))
        B = B[:, cols]
    if m <= p:
        ridx = rng.choice(p, size=m, replace=False)
    else:
        ridx = np.concatenate([rng.permutation(p), rng.integers(0, p, size=m - p)])
    return Dictionary(rows=B[ridx], kind=DictionaryKind.BINARY_WAVELET, seed=seed)
