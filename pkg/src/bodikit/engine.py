"""The optimization engine: embed, fit, acquire, evaluate, repeat.

Every iteration builds a FRESH dictionary from a per-iteration sub-seed,
re-embeds the entire training set, and re-fits the surrogate from scratch;
the embedding basis changes each round, so nothing is warm-started.  Runs
are deterministic functions of the config seed: per-iteration seeds come
from a seed sequence over (seed, iteration), so a retry or fallback in one
iteration cannot shift randomness in another.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .acquisition import (
    AcquisitionKind,
    AcquisitionSpec,
    EmbeddedAcquisition,
    LocalSearchConfig,
    MixedEmbeddedAcquisition,
    beta_schedule,
    generate_initial_candidates,
    local_search_discrete,
    optimize_mixed,
)
from .benchmarks import Problem
from .combinatorics.dictionaries import (
    Dictionary,
    DictionaryKind,
    build_diverse_random_binary,
    build_diverse_random_categorical,
    build_naive_random,
    build_wavelet_dictionary,
    embed_many,
)
from .combinatorics.spaces import Point, SearchSpace
from .combinatorics.theory import cardinality_bound
from .exceptions import FitFailedError, IllConditionedKernelError, UnsupportedSpaceError
from .records import NO_DICTIONARY_SEED, IterationRow, RunRecord, make_run_record
from .surrogate import FitConfig, GpModel, TrainingSet, fit_gp

logger = logging.getLogger("bodikit.engine")

#: config value that picks the diverse builder matching the space
DICTIONARY_AUTO = "diverse-random"


def subseed(seed: int, *path: int) -> int:
    """Stable derived seed for (seed, step, ...) paths."""
    return int(np.random.SeedSequence((seed,) + tuple(path)).generate_state(1)[0])


def resolve_dictionary_kind(kind, space: SearchSpace) -> DictionaryKind:
    """Map a config value to a concrete builder, validating space support."""
    if isinstance(kind, DictionaryKind):
        resolved = kind
    elif kind == DICTIONARY_AUTO:
        resolved = (DictionaryKind.DIVERSE_RANDOM_BINARY if space.is_binary
                    else DictionaryKind.DIVERSE_RANDOM_CATEGORICAL)
    else:
        resolved = DictionaryKind(kind)
    if resolved in (DictionaryKind.DIVERSE_RANDOM_BINARY, DictionaryKind.BINARY_WAVELET):
        if not space.is_binary:
            raise UnsupportedSpaceError(
                f"{resolved.value} dictionaries need a binary space"
            )
    if resolved is DictionaryKind.EXPLICIT:
        raise ValueError("explicit dictionaries cannot be built from a seed")
    return resolved


def build_dictionary(kind, space: SearchSpace, m: int, seed: int) -> Dictionary:
    resolved = resolve_dictionary_kind(kind, space)
    if resolved is DictionaryKind.DIVERSE_RANDOM_BINARY:
        return build_diverse_random_binary(space.dim, m, seed)
    if resolved is DictionaryKind.DIVERSE_RANDOM_CATEGORICAL:
        return build_diverse_random_categorical(space, m, seed)
    if resolved is DictionaryKind.NAIVE_RANDOM:
        return build_naive_random(space, m, seed)
    return build_wavelet_dictionary(space.dim, m, seed)


@dataclass(frozen=True)
class BoConfig:
    """Everything a run needs besides the problem itself."""

    budget: int
    m: int = 128
    dictionary_kind: str | DictionaryKind = DICTIONARY_AUTO
    n_init: int = 10
    acquisition: AcquisitionKind = AcquisitionKind.EXPECTED_IMPROVEMENT
    local_search: LocalSearchConfig = field(default_factory=LocalSearchConfig)
    seed: int = 0
    delta: float = 0.1
    fit_restarts: int = 8
    fit_maxiter: int = 100

    def __post_init__(self):
        object.__setattr__(self, "acquisition", AcquisitionKind(self.acquisition))
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.n_init < 2:
            raise ValueError(f"n_init must be >= 2, got {self.n_init}")
        if self.budget < self.n_init:
            raise ValueError(
                f"budget ({self.budget}) must be >= n_init ({self.n_init})"
            )
        if not (0.0 < self.delta < 1.0):
            raise ValueError(f"delta must lie in (0,1), got {self.delta}")
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")

    def to_json(self) -> dict:
        kind = self.dictionary_kind
        return {
            "method": "bodi",
            "budget": self.budget,
            "m": self.m,
            "dictionary": kind.value if isinstance(kind, DictionaryKind) else kind,
            "n_init": self.n_init,
            "acquisition": self.acquisition.value,
            "local_search": {
                "num_restarts": self.local_search.num_restarts,
                "num_random_candidates": self.local_search.num_random_candidates,
                "num_spray_neighbors": self.local_search.num_spray_neighbors,
                "max_iters": self.local_search.max_iters,
                "max_alternating_rounds": self.local_search.max_alternating_rounds,
            },
            "seed": self.seed,
            "delta": self.delta,
            "fit_restarts": self.fit_restarts,
            "fit_maxiter": self.fit_maxiter,
        }


def _feature_matrix(dictionary: Dictionary, space: SearchSpace,
                    points: list[Point]) -> np.ndarray:
    Z = np.array([p.discrete for p in points], dtype=np.int64)
    phi = embed_many(dictionary, Z)
    if not space.has_continuous:
        return phi
    X = np.array([p.continuous for p in points], dtype=np.float64)
    return np.hstack([phi, space.normalize_continuous(X)])


def run_bodi(problem: Problem, config: BoConfig) -> RunRecord:
    """One full optimization run; never aborts mid-budget on fit failures."""
    space = problem.space
    kind = resolve_dictionary_kind(config.dictionary_kind, space)

    events: list[str] = []
    rows: list[IterationRow] = []
    points: list[Point] = []
    values: list[float] = []
    best = math.inf

    init_rng = np.random.default_rng(subseed(config.seed, 0))
    for iteration in range(1, config.n_init + 1):
        started = time.perf_counter()
        point = space.sample(init_rng)
        value = float(problem.evaluate(point))
        elapsed = time.perf_counter() - started
        points.append(point)
        values.append(value)
        best = min(best, value)
        rows.append(IterationRow(
            iteration=iteration, point=point, value=value, best_so_far=best,
            elapsed_s=elapsed, dict_seed=NO_DICTIONARY_SEED,
        ))

    use_ucb = config.acquisition is AcquisitionKind.UCB
    for iteration in range(config.n_init + 1, config.budget + 1):
        started = time.perf_counter()
        t_model = iteration - config.n_init
        dict_seed = subseed(config.seed, iteration)
        fit_seed = subseed(config.seed, iteration, 1)
        acq_rng = np.random.default_rng(subseed(config.seed, iteration, 2))

        dictionary = build_dictionary(kind, space, config.m, dict_seed)
        features = _feature_matrix(dictionary, space, points)
        y = np.asarray(values, dtype=np.float64)
        train = TrainingSet.from_data(
            features, -y if use_ucb else y, n_embed=config.m
        )

        beta = None
        try:
            params = fit_gp(train, FitConfig(
                restarts=config.fit_restarts, seed=fit_seed,
                maxiter=config.fit_maxiter,
            ))
            model = GpModel(params, train)
            if use_ucb:
                if dictionary.is_binary:
                    bound = cardinality_bound(dictionary)
                else:
                    # the binary bound does not apply; the full space size is
                    # always a valid cardinality cap
                    bound = space.discrete_size()
                beta = beta_schedule(bound, t_model, config.delta)
                spec = AcquisitionSpec(kind=AcquisitionKind.UCB, beta=beta,
                                       delta=config.delta, t=t_model)
            else:
                best_std = float(np.min(train.standardized_targets()))
                spec = AcquisitionSpec(kind=AcquisitionKind.EXPECTED_IMPROVEMENT,
                                       best_observed=best_std)
            incumbent = points[int(np.argmin(values))]
            if space.has_continuous:
                acq = MixedEmbeddedAcquisition(model, dictionary, space, spec)
                point = optimize_mixed(acq, space, config.local_search, acq_rng,
                                       incumbent=incumbent)
            else:
                evaluator = EmbeddedAcquisition(model, dictionary, space, spec)
                starts = generate_initial_candidates(
                    evaluator, space, incumbent, config.local_search, acq_rng
                )
                point, _ = local_search_discrete(
                    evaluator, space, starts, config.local_search.max_iters
                )
        except (FitFailedError, IllConditionedKernelError) as exc:
            message = f"iteration {iteration}: surrogate fit failed ({exc}); random fallback"
            logger.warning(message)
            events.append(message)
            point = space.sample(acq_rng)
            beta = None

        value = float(problem.evaluate(point))
        elapsed = time.perf_counter() - started
        points.append(point)
        values.append(value)
        best = min(best, value)
        rows.append(IterationRow(
            iteration=iteration, point=point, value=value, best_so_far=best,
            elapsed_s=elapsed, dict_seed=dict_seed, beta=beta,
        ))
        logger.info("iteration %d: value %.6g best %.6g", iteration, value, best)

    return make_run_record(problem, rows, config_echo=config.to_json(),
                           events=tuple(events))


@dataclass(frozen=True)
class DiagnosticRow:
    truth: float
    mean: float
    lower: float
    upper: float


@dataclass(frozen=True)
class DiagnosticReport:
    """Held-out predictive quality of the surrogate for one dictionary draw."""

    problem_name: str
    dictionary_kind: str
    m: int
    seed: int
    n_train: int
    n_test: int
    rmse_standardized: float
    rmse: float
    nlpd: float
    coverage95: float
    lengthscales_below_10: int
    params: dict
    rows: tuple[DiagnosticRow, ...]

    def to_json(self) -> dict:
        return {
            "problem": self.problem_name,
            "dictionary": self.dictionary_kind,
            "m": self.m,
            "seed": self.seed,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "rmse_standardized": self.rmse_standardized,
            "rmse": self.rmse,
            "nlpd": self.nlpd,
            "coverage95": self.coverage95,
            "lengthscales_below_10": self.lengthscales_below_10,
            "params": self.params,
            "rows": [
                {"truth": r.truth, "mean": r.mean, "lower": r.lower, "upper": r.upper}
                for r in self.rows
            ],
        }


def model_diagnostics(problem: Problem, n_train: int, n_test: int,
                      dictionary_kind, m: int, seed: int,
                      fit_restarts: int = 8) -> DiagnosticReport:
    """Fit on a random design, predict a held-out set, report fit quality.

    RMSE and NLPD are computed in standardized target units (RMSE also
    reported raw); intervals are 95% predictive, i.e. they include the
    fitted noise variance.
    """
    if n_train < 2:
        raise ValueError(f"n_train must be >= 2, got {n_train}")
    if n_test < 1:
        raise ValueError(f"n_test must be >= 1, got {n_test}")
    space = problem.space
    kind = resolve_dictionary_kind(dictionary_kind, space)
    rng = np.random.default_rng(subseed(seed, 11))
    points = [space.sample(rng) for _ in range(n_train + n_test)]
    targets = np.array([problem.evaluate(p) for p in points])

    dictionary = build_dictionary(kind, space, m, subseed(seed, 12))
    features = _feature_matrix(dictionary, space, points)
    train = TrainingSet.from_data(features[:n_train], targets[:n_train], n_embed=m)
    params = fit_gp(train, FitConfig(restarts=fit_restarts, seed=subseed(seed, 13)))
    model = GpModel(params, train)
    post = model.predict(features[n_train:])

    truth_std = (targets[n_train:] - train.target_mean) / train.target_std
    predictive_var = post.variance + params.noise_variance
    errors = post.mean - truth_std
    rmse_std = float(np.sqrt(np.mean(errors ** 2)))
    nlpd = float(np.mean(
        0.5 * np.log(2.0 * math.pi * predictive_var)
        + errors ** 2 / (2.0 * predictive_var)
    ))
    half_width = 1.96 * np.sqrt(predictive_var)
    coverage = float(np.mean(np.abs(errors) <= half_width))

    mean_raw = post.mean * train.target_std + train.target_mean
    half_raw = half_width * train.target_std
    rows = tuple(
        DiagnosticRow(
            truth=float(targets[n_train + i]),
            mean=float(mean_raw[i]),
            lower=float(mean_raw[i] - half_raw[i]),
            upper=float(mean_raw[i] + half_raw[i]),
        )
        for i in range(n_test)
    )
    return DiagnosticReport(
        problem_name=problem.name,
        dictionary_kind=kind.value,
        m=m,
        seed=seed,
        n_train=n_train,
        n_test=n_test,
        rmse_standardized=rmse_std,
        rmse=rmse_std * train.target_std,
        nlpd=nlpd,
        coverage95=coverage,
        lengthscales_below_10=int(np.count_nonzero(params.lengthscales < 10.0)),
        params=params.to_json(),
        rows=rows,
    )


@dataclass(frozen=True)
class AblationResult:
    """Best-so-far traces per dictionary size, over shared seeds."""

    m_values: tuple[int, ...]
    seeds: tuple[int, ...]
    traces: dict
    median_traces: dict

    def median_final(self, m: int) -> float:
        return self.median_traces[m][-1]


def dictionary_ablation(problem: Problem, m_values, config: BoConfig,
                        seeds) -> AblationResult:
    """Run the engine for each m over the same seed list."""
    m_values = tuple(int(m) for m in m_values)
    seeds = tuple(int(s) for s in seeds)
    if not m_values:
        raise ValueError("m_values must be nonempty")
    if not seeds:
        raise ValueError("seeds must be nonempty")
    traces: dict[int, list[list[float]]] = {}
    for m in m_values:
        per_seed = []
        for seed in seeds:
            record = run_bodi(problem, replace(config, m=m, seed=seed))
            per_seed.append([row.best_so_far for row in record.rows])
        traces[m] = per_seed
    median_traces = {
        m: np.median(np.asarray(per_seed), axis=0).tolist()
        for m, per_seed in traces.items()
    }
    return AblationResult(m_values=m_values, seeds=seeds, traces=traces,
                          median_traces=median_traces)
