"""Gaussian-process regression on embedded and mixed inputs.

The surrogate is a standard GP with a Matern-5/2 ARD kernel.  Embedding
features enter raw (integer distances 0..d, their scale absorbed by the
lengthscales); continuous features are expected min-max normalized to [0,1]
by the caller.  Mixed inputs use a product of two unit-variance Matern-5/2
factors (one per block) under a single shared signal variance.

Targets are standardized to zero mean and unit variance before fitting;
:class:`Posterior` carries the constants so callers can de-standardize.

The marginal likelihood and its analytic gradient are organized around
matrix products rather than pairwise loops, which is what keeps full BO runs
(hundreds of refits on up to ~150 points with ~130 features) fast enough to
be practical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize

from .exceptions import DimensionError, FitFailedError, IllConditionedKernelError

SQRT5 = math.sqrt(5.0)

LENGTHSCALE_BOUNDS = (1e-3, 1e3)
SIGNAL_VARIANCE_BOUNDS = (1e-3, 1e3)
NOISE_VARIANCE_BOUNDS = (1e-6, 1.0)

DEFAULT_JITTER = 1e-8
_JITTER_ESCALATIONS = 3  # 1e-8 -> 1e-6 -> 1e-4, then give up

DEGENERATE_STD = 1e-12


@dataclass(frozen=True)
class GpHyperparams:
    """ARD lengthscales (one per feature column), signal and noise variance."""

    lengthscales: np.ndarray
    signal_variance: float
    noise_variance: float

    def __post_init__(self):
        ls = np.asarray(self.lengthscales, dtype=np.float64).copy()
        if ls.ndim != 1 or ls.shape[0] < 1:
            raise DimensionError(f"lengthscales must be a 1-D vector, got shape {ls.shape}")
        if np.any(ls <= 0) or not np.all(np.isfinite(ls)):
            raise ValueError("lengthscales must be positive and finite")
        if not (self.signal_variance > 0 and math.isfinite(self.signal_variance)):
            raise ValueError(f"signal variance must be positive, got {self.signal_variance}")
        if not (self.noise_variance >= 0 and math.isfinite(self.noise_variance)):
            raise ValueError(f"noise variance must be nonnegative, got {self.noise_variance}")
        ls.setflags(write=False)
        object.__setattr__(self, "lengthscales", ls)

    @property
    def dim(self) -> int:
        return self.lengthscales.shape[0]

    def to_log_vector(self) -> np.ndarray:
        """[log lengthscales..., log s^2, log sigma^2] for optimizer space."""
        return np.concatenate(
            [np.log(self.lengthscales),
             [math.log(self.signal_variance), math.log(self.noise_variance)]]
        )

    @classmethod
    def from_log_vector(cls, vec: np.ndarray) -> "GpHyperparams":
        vec = np.asarray(vec, dtype=np.float64)
        return cls(
            lengthscales=np.exp(vec[:-2]),
            signal_variance=float(math.exp(vec[-2])),
            noise_variance=float(math.exp(vec[-1])),
        )

    def to_json(self) -> dict:
        return {
            "lengthscales": self.lengthscales.tolist(),
            "signal_variance": self.signal_variance,
            "noise_variance": self.noise_variance,
        }


@dataclass(frozen=True)
class TrainingSet:
    """Feature matrix, raw targets, and standardization constants.

    ``n_embed`` is the number of leading embedding columns; any remaining
    columns form the continuous block of the product kernel.
    """

    features: np.ndarray
    targets: np.ndarray
    n_embed: int
    target_mean: float
    target_std: float
    degenerate: bool

    @classmethod
    def from_data(cls, features, targets, n_embed: int | None = None) -> "TrainingSet":
        X = np.asarray(features, dtype=np.float64)
        y = np.asarray(targets, dtype=np.float64).ravel()
        if X.ndim != 2:
            raise DimensionError(f"features must be 2-D, got shape {X.shape}")
        if X.shape[0] != y.shape[0]:
            raise DimensionError(
                f"{X.shape[0]} feature rows vs {y.shape[0]} targets"
            )
        if X.shape[0] < 1:
            raise DimensionError("need at least one training point")
        if n_embed is None:
            n_embed = X.shape[1]
        if not (1 <= n_embed <= X.shape[1]):
            raise DimensionError(
                f"n_embed={n_embed} outside [1, {X.shape[1]}]"
            )
        mean = float(np.mean(y))
        std = float(np.std(y))
        degenerate = not (math.isfinite(std) and std > DEGENERATE_STD)
        if degenerate:
            std = 1.0
        X = X.copy()
        X.setflags(write=False)
        y = y.copy()
        y.setflags(write=False)
        return cls(features=X, targets=y, n_embed=int(n_embed),
                   target_mean=mean, target_std=std, degenerate=degenerate)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def standardized_targets(self) -> np.ndarray:
        return (self.targets - self.target_mean) / self.target_std


@dataclass(frozen=True)
class Posterior:
    """Predictive mean/variance in standardized units, with raw accessors."""

    mean: np.ndarray
    variance: np.ndarray
    target_mean: float
    target_std: float

    @property
    def mean_destandardized(self) -> np.ndarray:
        return self.mean * self.target_std + self.target_mean

    @property
    def variance_destandardized(self) -> np.ndarray:
        return self.variance * (self.target_std ** 2)


def _block_slices(n_features: int, n_embed: int) -> list[slice]:
    if n_embed >= n_features:
        return [slice(0, n_features)]
    return [slice(0, n_embed), slice(n_embed, n_features)]


def _scaled_sq_dists(Xs: np.ndarray, Ys: np.ndarray) -> np.ndarray:
    """Pairwise squared distances of pre-scaled rows, clamped at 0."""
    x2 = np.einsum("ij,ij->i", Xs, Xs)
    y2 = np.einsum("ij,ij->i", Ys, Ys)
    r2 = x2[:, None] + y2[None, :] - 2.0 * (Xs @ Ys.T)
    np.maximum(r2, 0.0, out=r2)
    return r2


def _matern52_unit(r2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unit-variance Matern-5/2 from squared scaled distance; returns (K, r)."""
    r = np.sqrt(r2)
    k = (1.0 + SQRT5 * r + (5.0 / 3.0) * r2) * np.exp(-SQRT5 * r)
    return k, r


def matern52_ard(u, v, params: GpHyperparams) -> float:
    """Matern-5/2 ARD kernel between two feature vectors."""
    uu = np.asarray(u, dtype=np.float64).ravel()
    vv = np.asarray(v, dtype=np.float64).ravel()
    if uu.shape != vv.shape:
        raise DimensionError(f"vectors of shape {uu.shape} vs {vv.shape}")
    if uu.shape[0] != params.dim:
        raise DimensionError(
            f"{uu.shape[0]} features vs {params.dim} lengthscales"
        )
    diff = (uu - vv) / params.lengthscales
    r2 = float(diff @ diff)
    k, _ = _matern52_unit(np.asarray(r2))
    return float(params.signal_variance * k)


def mixed_kernel(u, v, params: GpHyperparams, n_embed: int) -> float:
    """Product of unit Matern-5/2 factors over the embedding and continuous
    blocks, sharing one signal variance."""
    uu = np.asarray(u, dtype=np.float64).ravel()
    vv = np.asarray(v, dtype=np.float64).ravel()
    if uu.shape != vv.shape:
        raise DimensionError(f"vectors of shape {uu.shape} vs {vv.shape}")
    if uu.shape[0] != params.dim:
        raise DimensionError(f"{uu.shape[0]} features vs {params.dim} lengthscales")
    if not (1 <= n_embed <= uu.shape[0]):
        raise DimensionError(f"n_embed={n_embed} outside [1, {uu.shape[0]}]")
    value = params.signal_variance
    for sl in _block_slices(uu.shape[0], n_embed):
        diff = (uu[sl] - vv[sl]) / params.lengthscales[sl]
        k, _ = _matern52_unit(np.asarray(float(diff @ diff)))
        value *= float(k)
    return value


def kernel_matrix(params: GpHyperparams, X, n_embed: int | None = None,
                  X2=None) -> np.ndarray:
    """Noise-free kernel matrix K_f (cross matrix when X2 is given)."""
    X = np.asarray(X, dtype=np.float64)
    Y = X if X2 is None else np.asarray(X2, dtype=np.float64)
    if X.shape[1] != params.dim or Y.shape[1] != params.dim:
        raise DimensionError("feature width does not match lengthscale count")
    if n_embed is None:
        n_embed = params.dim
    K = np.full((X.shape[0], Y.shape[0]), params.signal_variance)
    for sl in _block_slices(params.dim, n_embed):
        ls = params.lengthscales[sl]
        k_block, _ = _matern52_unit(_scaled_sq_dists(X[:, sl] / ls, Y[:, sl] / ls))
        K *= k_block
    return K


def _cholesky_with_escalation(K_f: np.ndarray, noise_variance: float,
                              jitter: float) -> tuple[np.ndarray, float]:
    """Factorize K_f + (noise + jitter) I, escalating jitter x100 twice."""
    n = K_f.shape[0]
    jit = jitter
    last_error = None
    for _ in range(_JITTER_ESCALATIONS):
        K = K_f.copy()
        K[np.diag_indices(n)] += noise_variance + jit
        try:
            return cholesky(K, lower=True), jit
        except np.linalg.LinAlgError as exc:  # scipy raises numpy's LinAlgError
            last_error = exc
            jit *= 100.0
    raise IllConditionedKernelError(
        f"Cholesky failed up to jitter {jit / 100.0:g}: {last_error}"
    )


def log_marginal_likelihood(params: GpHyperparams, train: TrainingSet,
                            jitter: float = DEFAULT_JITTER) -> tuple[float, np.ndarray]:
    """Log marginal likelihood and its gradient in log-parameter space.

    Returns ``(value, grad)`` with ``grad`` ordered as
    ``[d/dlog ell_1, ..., d/dlog ell_D, d/dlog s^2, d/dlog sigma^2]``.
    """
    X = train.features
    y = train.standardized_targets()
    n, D = X.shape
    if params.dim != D:
        raise DimensionError(f"{D} features vs {params.dim} lengthscales")
    slices = _block_slices(D, train.n_embed)

    scaled = []
    units = []
    grad_coefs = []
    for sl in slices:
        Xs = X[:, sl] / params.lengthscales[sl]
        r2 = _scaled_sq_dists(Xs, Xs)
        k_block, r = _matern52_unit(r2)
        # dK/dlog ell_k = coef * (scaled diff_k)^2; coef has no 1/r singularity
        coef = (5.0 / 3.0) * (1.0 + SQRT5 * r) * np.exp(-SQRT5 * r)
        scaled.append(Xs)
        units.append(k_block)
        grad_coefs.append(coef)

    K_unit = units[0] if len(units) == 1 else units[0] * units[1]
    K_f = params.signal_variance * K_unit
    L, _ = _cholesky_with_escalation(K_f, params.noise_variance, jitter)

    alpha = cho_solve((L, True), y, check_finite=False)
    value = (
        -0.5 * float(y @ alpha)
        - float(np.sum(np.log(np.diag(L))))
        - 0.5 * n * math.log(2.0 * math.pi)
    )

    K_inv = cho_solve((L, True), np.eye(n), check_finite=False)
    W = np.outer(alpha, alpha) - K_inv

    grad = np.empty(D + 2)
    for b, sl in enumerate(slices):
        other = units[1 - b] if len(units) == 2 else 1.0
        G = (0.5 * params.signal_variance) * (W * grad_coefs[b] * other)
        Xs = scaled[b]
        row_plus_col = 2.0 * G.sum(axis=1)  # G is symmetric
        T = G @ Xs
        grad[sl] = row_plus_col @ (Xs * Xs) - 2.0 * np.einsum("ik,ik->k", Xs, T)
    grad[D] = 0.5 * float(np.sum(W * K_f))
    grad[D + 1] = 0.5 * params.noise_variance * float(np.trace(W))
    return value, grad


@dataclass(frozen=True)
class FitConfig:
    """Multi-start maximum-a-posteriori settings."""

    restarts: int = 8
    seed: int = 0
    maxiter: int = 100
    jitter: float = DEFAULT_JITTER

    def __post_init__(self):
        if self.restarts < 0:
            raise ValueError("restarts must be >= 0")
        if self.maxiter < 1:
            raise ValueError("maxiter must be >= 1")


#: log-space standard deviations of the weak log-normal hyperpriors; pure
#: maximum likelihood with ARD and more features than points collapses to
#: exact interpolation at near-zero noise, which is confidently wrong off
#: the training set, so the fit shrinks gently toward the default start
LENGTHSCALE_PRIOR_SIGMA = 1.5
SIGNAL_PRIOR_SIGMA = 2.0
NOISE_PRIOR_SIGMA = 2.0
NOISE_PRIOR_CENTER = 1e-2


def hyperprior_log_density(log_vec: np.ndarray, n_features: int) -> tuple[float, np.ndarray]:
    """Log density (up to constants) and gradient of the fit's hyperprior.

    Independent log-normals centered at the default start: lengthscales at
    sqrt(D), signal variance at 1, noise variance at NOISE_PRIOR_CENTER.
    """
    vec = np.asarray(log_vec, dtype=np.float64)
    centers = np.concatenate([
        np.full(n_features, 0.5 * math.log(n_features)),
        [0.0, math.log(NOISE_PRIOR_CENTER)],
    ])
    sigmas = np.concatenate([
        np.full(n_features, LENGTHSCALE_PRIOR_SIGMA),
        [SIGNAL_PRIOR_SIGMA, NOISE_PRIOR_SIGMA],
    ])
    resid = (vec - centers) / sigmas
    value = -0.5 * float(resid @ resid)
    grad = -resid / sigmas
    return value, grad


def default_hyperparams(n_features: int) -> GpHyperparams:
    """Fallback / default start: ell = sqrt(D), s^2 = 1, sigma^2 = 1e-3."""
    return GpHyperparams(
        lengthscales=np.full(n_features, math.sqrt(n_features)),
        signal_variance=1.0,
        noise_variance=1e-3,
    )


def _log_bounds(n_features: int) -> list[tuple[float, float]]:
    lb = [(math.log(LENGTHSCALE_BOUNDS[0]), math.log(LENGTHSCALE_BOUNDS[1]))] * n_features
    lb.append((math.log(SIGNAL_VARIANCE_BOUNDS[0]), math.log(SIGNAL_VARIANCE_BOUNDS[1])))
    lb.append((math.log(NOISE_VARIANCE_BOUNDS[0]), math.log(NOISE_VARIANCE_BOUNDS[1])))
    return lb


def fit_gp(train: TrainingSet, config: FitConfig | None = None) -> GpHyperparams:
    """Maximize marginal likelihood plus the weak hyperprior, multi-start.

    Deterministic given ``config.seed``: every restart's initial point is
    drawn up front, and the winner is the lowest penalized negative
    log-likelihood with ties broken by start index, so serial and parallel
    evaluation agree.
    """
    if config is None:
        config = FitConfig()
    if train.n < 2:
        raise ValueError("fitting needs at least two training points")
    D = train.n_features
    if train.degenerate:
        return default_hyperparams(D)

    rng = np.random.default_rng(config.seed)
    starts = [default_hyperparams(D).to_log_vector()]
    for _ in range(config.restarts):
        log_ls = rng.uniform(math.log(1e-1), math.log(1e2), size=D)
        log_s2 = rng.uniform(math.log(1e-1), math.log(1e1))
        log_n2 = rng.uniform(math.log(1e-5), math.log(1e-1))
        starts.append(np.concatenate([log_ls, [log_s2, log_n2]]))

    def objective(log_vec):
        p = GpHyperparams.from_log_vector(log_vec)
        value, grad = log_marginal_likelihood(p, train, jitter=config.jitter)
        prior_value, prior_grad = hyperprior_log_density(log_vec, D)
        return -(value + prior_value), -(grad + prior_grad)

    bounds = _log_bounds(D)
    best_fun = math.inf
    best_x = None
    failures = []
    for idx, x0 in enumerate(starts):
        try:
            result = minimize(
                objective, x0, jac=True, method="L-BFGS-B", bounds=bounds,
                options={"maxiter": config.maxiter},
            )
        except (IllConditionedKernelError, FloatingPointError) as exc:
            failures.append(f"start {idx}: {exc}")
            continue
        if not math.isfinite(result.fun):
            failures.append(f"start {idx}: non-finite objective")
            continue
        if result.fun < best_fun:
            best_fun = result.fun
            best_x = result.x
    if best_x is None:
        raise FitFailedError(
            f"all {len(starts)} starts failed: " + "; ".join(failures[:4])
        )
    # guard against minute bound overshoot from the optimizer
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    return GpHyperparams.from_log_vector(np.clip(best_x, lo, hi))


class GpModel:
    """Fitted hyperparameters plus the cached factorization over a training set.

    Immutable after construction; safe to share across threads for
    concurrent posterior queries.
    """

    def __init__(self, params: GpHyperparams, train: TrainingSet,
                 jitter: float = DEFAULT_JITTER):
        if params.dim != train.n_features:
            raise DimensionError(
                f"{train.n_features} features vs {params.dim} lengthscales"
            )
        self.params = params
        self.train = train
        K_f = kernel_matrix(params, train.features, n_embed=train.n_embed)
        self._L, self.jitter_used = _cholesky_with_escalation(
            K_f, params.noise_variance, jitter
        )
        self._alpha = cho_solve((self._L, True), train.standardized_targets(),
                                check_finite=False)

    def predict(self, features) -> Posterior:
        """Posterior over the latent function at query feature rows."""
        Xq = np.asarray(features, dtype=np.float64)
        single = Xq.ndim == 1
        if single:
            Xq = Xq[None, :]
        if Xq.shape[1] != self.params.dim:
            raise DimensionError(
                f"query width {Xq.shape[1]} vs {self.params.dim} lengthscales"
            )
        K_star = kernel_matrix(self.params, Xq, n_embed=self.train.n_embed,
                               X2=self.train.features)
        mean = K_star @ self._alpha
        V = solve_triangular(self._L, K_star.T, lower=True, check_finite=False)
        var = self.params.signal_variance - np.einsum("ij,ij->j", V, V)
        cap = self.params.signal_variance + self.params.noise_variance
        np.clip(var, 0.0, cap, out=var)
        if single:
            mean = mean[0:1]
            var = var[0:1]
        return Posterior(mean=mean, variance=var,
                         target_mean=self.train.target_mean,
                         target_std=self.train.target_std)


def posterior(params: GpHyperparams, train: TrainingSet, features,
              jitter: float = DEFAULT_JITTER) -> Posterior:
    """One-shot posterior; build a :class:`GpModel` directly to amortize the
    factorization across many queries."""
    return GpModel(params, train, jitter=jitter).predict(features)
