"""Acquisition functions and their optimizers over discrete and mixed spaces.

Everything here follows the minimization convention: objectives get smaller,
expected improvement measures expected decrease below the best observed
value, and the confidence-bound path is handled by the engine fitting the
surrogate on negated targets.

The discrete optimizer is greedy best-improvement hill climbing over the
one-Hamming neighborhood, restarted from the top-ranked members of a pool of
uniform random points plus "spray" perturbations of the incumbent.  Mixed
spaces alternate that discrete step with bounded quasi-Newton ascent over
the continuous block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import minimize
from scipy.special import ndtr

from .combinatorics.dictionaries import Dictionary, embed_many
from .combinatorics.spaces import Point, SearchSpace
from .exceptions import DimensionError
from .surrogate import GpModel, Posterior

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class AcquisitionKind(str, Enum):
    EXPECTED_IMPROVEMENT = "ei"
    UCB = "ucb"


@dataclass(frozen=True)
class AcquisitionSpec:
    """Which acquisition to score with, plus its scalar state.

    ``best_observed`` is the incumbent in standardized target units (EI);
    ``beta`` is the resolved confidence multiplier (UCB), with ``delta`` and
    ``t`` recording the schedule inputs that produced it.
    """

    kind: AcquisitionKind
    best_observed: float | None = None
    beta: float | None = None
    delta: float | None = None
    t: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", AcquisitionKind(self.kind))
        if self.kind is AcquisitionKind.EXPECTED_IMPROVEMENT:
            if self.best_observed is None:
                raise ValueError("EI needs best_observed")
        else:
            if self.beta is None or not self.beta > 0:
                raise ValueError("UCB needs beta > 0")
        if self.delta is not None and not (0.0 < self.delta < 1.0):
            raise ValueError(f"delta must lie in (0,1), got {self.delta}")


@dataclass(frozen=True)
class LocalSearchConfig:
    """Sizes for the restart pool and the hill-climbing budget."""

    num_restarts: int = 20
    num_random_candidates: int = 2000
    num_spray_neighbors: int = 100
    max_iters: int = 100
    max_alternating_rounds: int = 4  # mixed spaces only

    def __post_init__(self):
        for name in ("num_restarts", "num_random_candidates",
                     "num_spray_neighbors", "max_iters", "max_alternating_rounds"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")


def expected_improvement(post: Posterior, best: float) -> np.ndarray:
    """Expected decrease below ``best`` (minimization), elementwise.

    With g = best - mu: EI = g Phi(g/sigma) + sigma phi(g/sigma) for
    sigma > 0, and max(g, 0) at sigma = 0.  Always nonnegative.
    """
    mean = np.asarray(post.mean, dtype=np.float64)
    var = np.asarray(post.variance, dtype=np.float64)
    g = best - mean
    sigma = np.sqrt(np.maximum(var, 0.0))
    out = np.maximum(g, 0.0)  # exact sigma = 0 case
    positive = sigma > 0
    if np.any(positive):
        gp = g[positive]
        sp = sigma[positive]
        u = gp / sp
        pdf = np.exp(-0.5 * u * u) / _SQRT_2PI
        out[positive] = gp * ndtr(u) + sp * pdf
    return np.maximum(out, 0.0)


def ucb_value(post: Posterior, beta: float) -> np.ndarray:
    """mu + sqrt(beta) sigma, elementwise (maximization of negated targets)."""
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    mean = np.asarray(post.mean, dtype=np.float64)
    var = np.asarray(post.variance, dtype=np.float64)
    return mean + math.sqrt(beta) * np.sqrt(np.maximum(var, 0.0))


def beta_schedule(cardinality_bound: int, t: int, delta: float) -> float:
    """Confidence multiplier 2 ln(|S| t^2 pi^2 / (6 delta)), in log space.

    ``cardinality_bound`` may be an arbitrarily large Python integer; the
    result is computed as a sum of logarithms so nothing overflows.
    """
    if cardinality_bound < 1:
        raise ValueError(f"cardinality bound must be >= 1, got {cardinality_bound}")
    if t < 1:
        raise ValueError(f"iteration must be >= 1, got {t}")
    # failure probabilities are < 1 in practice, but the formula is defined
    # for any positive delta and the zero identity needs delta = pi^2/6
    if delta <= 0.0:
        raise ValueError(f"delta must be positive, got {delta}")
    return 2.0 * (
        _log_big(cardinality_bound)
        + 2.0 * math.log(t)
        + math.log(math.pi ** 2 / 6.0)
        - math.log(delta)
    )


def _log_big(value: int) -> float:
    # math.log handles arbitrary-precision ints directly
    return math.log(value)


def _score_posterior(post: Posterior, spec: AcquisitionSpec) -> np.ndarray:
    if spec.kind is AcquisitionKind.EXPECTED_IMPROVEMENT:
        return expected_improvement(post, spec.best_observed)
    return ucb_value(post, spec.beta)


def _neighbor_moves(space: SearchSpace, z: np.ndarray) -> list[tuple[int, int]]:
    """All one-Hamming moves in canonical order: coordinate, then category."""
    moves = []
    for j, tau in enumerate(space.cardinalities):
        for c in range(tau):
            if c != z[j]:
                moves.append((j, c))
    return moves


class EmbeddedAcquisition:
    """Scores discrete candidates through the embedding and the fitted GP.

    Optionally carries a frozen continuous block (raw units; normalized here)
    appended to every embedding row, which is how the mixed optimizer freezes
    x while searching over z.

    The neighbor scan uses an incremental embedding update: flipping
    coordinate j changes each distance by (a_ij != c) - (a_ij != z_j), so a
    full one-Hamming sweep costs O(m) per neighbor instead of O(m d).
    """

    def __init__(self, model: GpModel, dictionary: Dictionary, space: SearchSpace,
                 spec: AcquisitionSpec, continuous=None):
        if dictionary.d != space.dim:
            raise DimensionError(
                f"dictionary is {dictionary.d}-dimensional, space has {space.dim}"
            )
        self.model = model
        self.dictionary = dictionary
        self.space = space
        self.spec = spec
        if continuous is None:
            self._cont_norm = None
        else:
            self._cont_norm = space.normalize_continuous(
                np.asarray(continuous, dtype=np.float64)
            )

    def _features(self, phi: np.ndarray) -> np.ndarray:
        if self._cont_norm is None:
            return phi
        tail = np.tile(self._cont_norm, (phi.shape[0], 1))
        return np.hstack([phi, tail])

    def _score(self, phi: np.ndarray) -> np.ndarray:
        post = self.model.predict(self._features(phi))
        return _score_posterior(post, self.spec)

    def values_batch(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=np.int64)
        return self._score(embed_many(self.dictionary, Z))

    def value_one(self, z) -> float:
        return float(self.values_batch(np.asarray(z, dtype=np.int64)[None, :])[0])

    def neighbor_values(self, z) -> tuple[np.ndarray, list[tuple[int, int]]]:
        z = np.asarray(z, dtype=np.int64)
        rows = self.dictionary.rows
        phi = (rows != z[None, :]).sum(axis=1).astype(np.float64)
        moves = _neighbor_moves(self.space, z)
        deltas = np.empty((len(moves), rows.shape[0]))
        for k, (j, c) in enumerate(moves):
            col = rows[:, j]
            deltas[k] = (col != c).astype(np.float64) - (col != z[j]).astype(np.float64)
        return self._score(phi[None, :] + deltas), moves


class _CallableEvaluator:
    """Adapter giving plain callables the evaluator interface."""

    def __init__(self, fn, space: SearchSpace):
        self._fn = fn
        self.space = space

    def value_one(self, z) -> float:
        return float(self._fn(np.asarray(z, dtype=np.int64)))

    def values_batch(self, Z) -> np.ndarray:
        return np.array([self.value_one(z) for z in np.asarray(Z, dtype=np.int64)])

    def neighbor_values(self, z):
        z = np.asarray(z, dtype=np.int64)
        moves = _neighbor_moves(self.space, z)
        neighbors = np.tile(z, (len(moves), 1))
        for k, (j, c) in enumerate(moves):
            neighbors[k, j] = c
        return self.values_batch(neighbors), moves


def _as_evaluator(evaluator, space: SearchSpace):
    if hasattr(evaluator, "neighbor_values") and hasattr(evaluator, "values_batch"):
        return evaluator
    if callable(evaluator):
        return _CallableEvaluator(evaluator, space)
    raise TypeError("evaluator must expose values_batch/neighbor_values or be callable")


def _point_discrete(point) -> np.ndarray:
    if isinstance(point, Point):
        return point.discrete_array()
    return np.asarray(point, dtype=np.int64)


def generate_initial_candidates(evaluator, space: SearchSpace,
                                incumbent: Point | None,
                                cfg: LocalSearchConfig,
                                rng: np.random.Generator) -> list[Point]:
    """Top-ranked starts from a pool of uniform points plus incumbent sprays.

    Spray points perturb the incumbent in 1 to 3 random coordinates (each to
    a random different category); without an incumbent the pool is purely
    random.  Returns the ``cfg.num_restarts`` highest-acquisition pool
    members, ties broken by pool order (random block first).
    """
    evaluator = _as_evaluator(evaluator, space)
    d = space.dim
    pool = [space.sample_discrete(rng, cfg.num_random_candidates)]
    if incumbent is not None:
        base = _point_discrete(incumbent)
        taus = space.cardinalities
        spray = np.tile(base, (cfg.num_spray_neighbors, 1))
        max_flips = min(3, d)
        for i in range(cfg.num_spray_neighbors):
            r = int(rng.integers(1, max_flips + 1))
            coords = rng.choice(d, size=r, replace=False)
            for j in coords:
                alt = int(rng.integers(0, taus[j] - 1))
                if alt >= base[j]:
                    alt += 1
                spray[i, j] = alt
        pool.append(spray)
    pool_arr = np.vstack(pool)
    values = evaluator.values_batch(pool_arr)
    order = np.argsort(-values, kind="stable")[: cfg.num_restarts]
    return [Point(discrete=tuple(int(v) for v in pool_arr[i])) for i in order]


def local_search_discrete(evaluator, space: SearchSpace, starts, n_ls: int,
                          with_info: bool = False):
    """Greedy best-improvement hill climbing from each start.

    From each start, repeatedly move to the strict-best one-Hamming neighbor
    (ties: lowest coordinate, then lowest category) until no neighbor
    improves or ``n_ls`` moves were made.  Returns the best ``(point, value)``
    over all trajectories, first trajectory winning ties.  With
    ``with_info=True`` a third element reports per-trajectory move counts and
    whether the budget was exhausted.
    """
    if not starts:
        raise ValueError("local search needs at least one start")
    evaluator = _as_evaluator(evaluator, space)
    best_val = -math.inf
    best_z = None
    info = {"moves": [], "exhausted": []}
    for start in starts:
        z = _point_discrete(start).copy()
        val = evaluator.value_one(z)
        moves_made = 0
        while moves_made < n_ls:
            vals, moves = evaluator.neighbor_values(z)
            k = int(np.argmax(vals))  # first max: lowest coordinate, lowest category
            if vals[k] > val:
                j, c = moves[k]
                z[j] = c
                val = float(vals[k])
                moves_made += 1
            else:
                break
        info["moves"].append(moves_made)
        info["exhausted"].append(moves_made == n_ls)
        if val > best_val:
            best_val = val
            best_z = z
    point = Point(discrete=tuple(int(v) for v in best_z))
    if with_info:
        return point, best_val, info
    return point, best_val


class MixedEmbeddedAcquisition:
    """Acquisition over (z, x) pairs for alternating block optimization."""

    def __init__(self, model: GpModel, dictionary: Dictionary, space: SearchSpace,
                 spec: AcquisitionSpec):
        self.model = model
        self.dictionary = dictionary
        self.space = space
        self.spec = spec

    def evaluator_with_continuous(self, x) -> EmbeddedAcquisition:
        return EmbeddedAcquisition(self.model, self.dictionary, self.space,
                                   self.spec, continuous=x)

    def value(self, z, x) -> float:
        return self.evaluator_with_continuous(x).value_one(z)


def optimize_mixed(acq, space: SearchSpace, cfg: LocalSearchConfig,
                   rng: np.random.Generator, incumbent: Point | None = None) -> Point:
    """Alternating discrete/continuous maximization of a mixed acquisition.

    ``acq`` is a :class:`MixedEmbeddedAcquisition` (or anything exposing the
    same two methods).  The discrete block runs the hill climber with x
    frozen; the continuous block runs bounded L-BFGS-B with central
    finite-difference gradients from 5 starts.  Alternation stops when a
    round fails to strictly improve or after ``cfg.max_alternating_rounds``.
    Purely discrete spaces degenerate to a single discrete block.
    """
    if not space.has_continuous:
        evaluator = acq.evaluator_with_continuous(None)
        starts = generate_initial_candidates(evaluator, space, incumbent, cfg, rng)
        point, _ = local_search_discrete(evaluator, space, starts, cfg.max_iters)
        return point

    bounds = space.continuous_bounds_array()
    if incumbent is not None and incumbent.continuous is not None:
        x_cur = incumbent.continuous_array()
    else:
        x_cur = bounds.mean(axis=1)
    spray_center = incumbent

    best_val = -math.inf
    best_z = None
    best_x = x_cur.copy()
    for _ in range(cfg.max_alternating_rounds):
        evaluator = acq.evaluator_with_continuous(x_cur)
        starts = generate_initial_candidates(evaluator, space, spray_center, cfg, rng)
        z_point, val_z = local_search_discrete(evaluator, space, starts, cfg.max_iters)
        z_cur = z_point.discrete_array()

        def neg_value(x, _z=z_cur):
            return -acq.value(_z, np.clip(x, bounds[:, 0], bounds[:, 1]))

        x_starts = [x_cur.copy()]
        for _ in range(4):
            x_starts.append(bounds[:, 0] + (bounds[:, 1] - bounds[:, 0])
                            * rng.random(space.n_continuous))
        candidates = [(val_z, x_cur.copy())]
        for x0 in x_starts:
            result = minimize(
                neg_value, x0, method="L-BFGS-B", jac="3-point",
                bounds=[tuple(b) for b in bounds],
                options={"maxiter": 60, "finite_diff_rel_step": 1e-6},
            )
            x_opt = np.clip(result.x, bounds[:, 0], bounds[:, 1])
            candidates.append((float(acq.value(z_cur, x_opt)), x_opt))
        round_val, round_x = max(candidates, key=lambda t: t[0])

        if round_val > best_val:
            best_val = round_val
            best_z = z_cur.copy()
            best_x = round_x.copy()
            x_cur = round_x.copy()
            spray_center = Point(
                discrete=tuple(int(v) for v in best_z),
                continuous=tuple(float(v) for v in best_x),
            )
        else:
            break
    return Point(
        discrete=tuple(int(v) for v in best_z),
        continuous=tuple(float(v) for v in best_x),
    )
