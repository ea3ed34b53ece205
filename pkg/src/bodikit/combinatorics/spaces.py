"""Search-space declarations for binary, categorical, and mixed domains.

A space is a tuple of per-variable category counts plus an optional block of
box-bounded continuous variables.  Discrete variables take values in
``{0, ..., tau_j - 1}``; the binary case is ``tau_j == 2`` for every ``j``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import DimensionError


@dataclass(frozen=True)
class Point:
    """One candidate: discrete assignment plus optional continuous block."""

    discrete: tuple[int, ...]
    continuous: tuple[float, ...] | None = None

    def discrete_array(self) -> np.ndarray:
        return np.asarray(self.discrete, dtype=np.int64)

    def continuous_array(self) -> np.ndarray | None:
        if self.continuous is None:
            return None
        return np.asarray(self.continuous, dtype=np.float64)


@dataclass(frozen=True)
class SearchSpace:
    """Mixed search space: categorical head, optional continuous tail.

    Parameters
    ----------
    cardinalities:
        Per-variable category counts, each >= 2.
    continuous_bounds:
        ``(low, high)`` per continuous variable, or ``None`` for purely
        discrete spaces.
    """

    cardinalities: tuple[int, ...]
    continuous_bounds: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if len(self.cardinalities) == 0:
            raise DimensionError("a space needs at least one discrete variable")
        for j, tau in enumerate(self.cardinalities):
            if int(tau) != tau or tau < 2:
                raise DimensionError(
                    f"cardinality of variable {j} must be an integer >= 2, got {tau!r}"
                )
        if self.continuous_bounds is not None:
            for j, (lo, hi) in enumerate(self.continuous_bounds):
                if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                    raise DimensionError(
                        f"continuous variable {j} needs finite bounds with low < high"
                    )

    @classmethod
    def binary(cls, d: int) -> "SearchSpace":
        """All-binary space {0,1}^d."""
        if d < 1:
            raise DimensionError(f"binary space needs d >= 1, got {d}")
        return cls(cardinalities=(2,) * d)

    @property
    def dim(self) -> int:
        """Number of discrete variables."""
        return len(self.cardinalities)

    @property
    def n_continuous(self) -> int:
        if self.continuous_bounds is None:
            return 0
        return len(self.continuous_bounds)

    @property
    def has_continuous(self) -> bool:
        return self.n_continuous > 0

    @property
    def is_binary(self) -> bool:
        return all(tau == 2 for tau in self.cardinalities)

    def discrete_size(self) -> int:
        """Exact number of discrete assignments (Python int, never overflows)."""
        size = 1
        for tau in self.cardinalities:
            size *= int(tau)
        return size

    def sample_discrete(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        """Uniform discrete assignment(s); shape (d,) or (size, d)."""
        taus = np.asarray(self.cardinalities, dtype=np.int64)
        if size is None:
            return rng.integers(0, taus, size=self.dim, dtype=np.int64)
        return rng.integers(0, taus, size=(size, self.dim), dtype=np.int64)

    def sample_continuous(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        if not self.has_continuous:
            raise DimensionError("space has no continuous variables")
        bounds = np.asarray(self.continuous_bounds, dtype=np.float64)
        lo, hi = bounds[:, 0], bounds[:, 1]
        if size is None:
            return lo + (hi - lo) * rng.random(self.n_continuous)
        return lo + (hi - lo) * rng.random((size, self.n_continuous))

    def continuous_bounds_array(self) -> np.ndarray:
        if not self.has_continuous:
            raise DimensionError("space has no continuous variables")
        return np.asarray(self.continuous_bounds, dtype=np.float64)

    def normalize_continuous(self, x) -> np.ndarray:
        """Map continuous values (rows or a single vector) to [0,1] per bounds."""
        bounds = self.continuous_bounds_array()
        arr = np.asarray(x, dtype=np.float64)
        if arr.shape[-1] != self.n_continuous:
            raise DimensionError(
                f"expected {self.n_continuous} continuous values, got shape {arr.shape}"
            )
        return (arr - bounds[:, 0]) / (bounds[:, 1] - bounds[:, 0])

    def sample(self, rng: np.random.Generator) -> Point:
        """One uniform point over the full (mixed) space."""
        z = self.sample_discrete(rng)
        if self.has_continuous:
            x = self.sample_continuous(rng)
            return Point(discrete=tuple(int(v) for v in z),
                         continuous=tuple(float(v) for v in x))
        return Point(discrete=tuple(int(v) for v in z))

    def validate_discrete(self, z) -> np.ndarray:
        """Check an assignment against the space; returns it as int64 array."""
        arr = np.asarray(z, dtype=np.int64)
        if arr.ndim != 1 or arr.shape[0] != self.dim:
            raise DimensionError(
                f"assignment has shape {arr.shape}, space has {self.dim} discrete variables"
            )
        taus = np.asarray(self.cardinalities, dtype=np.int64)
        if np.any(arr < 0) or np.any(arr >= taus):
            bad = int(np.argmax((arr < 0) | (arr >= taus)))
            raise DimensionError(
                f"variable {bad} takes value {arr[bad]} outside [0, {taus[bad]})"
            )
        return arr

    def validate_point(self, point: Point) -> None:
        self.validate_discrete(point.discrete)
        if self.has_continuous:
            x = point.continuous_array()
            if x is None or x.shape[0] != self.n_continuous:
                raise DimensionError(
                    f"point needs {self.n_continuous} continuous values"
                )
            bounds = np.asarray(self.continuous_bounds, dtype=np.float64)
            if np.any(x < bounds[:, 0]) or np.any(x > bounds[:, 1]):
                raise DimensionError("continuous value outside its bounds")
        elif point.continuous is not None and len(point.continuous) > 0:
            raise DimensionError("point has continuous values but the space does not")
