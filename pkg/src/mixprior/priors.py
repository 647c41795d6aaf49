"""Prior construction from offline data.

Pipeline: sample offline datasets, fit a ridge-regularized linear model to
each, fit an L-component Gaussian mixture to the fitted parameter vectors by
EM, and package the result as a GaussianMixturePrior. Includes the versioned
on-disk prior format.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import ConfigError, NumericalError
from .linalg import spd_cholesky
from .linear import GaussianMixturePrior
from .mixture import MixtureWeights, normalize

logger = logging.getLogger(__name__)

PRIOR_FORMAT = "gaussian-mixture-prior"
PRIOR_VERSION = 1


@dataclass(frozen=True)
class OfflineDataset:
    """Feature rows with scalar rewards."""

    features: np.ndarray
    rewards: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        y = np.asarray(self.rewards, dtype=float)
        if X.ndim != 2 or X.shape[0] < 1:
            raise ValueError("features must be a nonempty (m, d) array")
        if y.shape != (X.shape[0],):
            raise ValueError("rewards must match the number of feature rows")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "rewards", y)


def fit_linear_model(data: OfflineDataset, ridge: float) -> np.ndarray:
    """Ridge solution (X'X + ridge I)^-1 X'y."""
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    X, y = data.features, data.rewards
    d = X.shape[1]
    gram = X.T @ X + ridge * np.eye(d)
    try:
        return np.linalg.solve(gram, X.T @ y)
    except np.linalg.LinAlgError:
        raise NumericalError(
            "singular normal equations; increase the ridge parameter"
        ) from None


@dataclass(frozen=True)
class GMMConfig:
    """EM settings: stop when the log-likelihood improves by less than tol or
    after max_iters; every M-step adds reg_scale*trace(global cov)/d to the
    covariance diagonal; cov_type 'diag' zeroes off-diagonal entries."""

    tol: float = 1e-6
    max_iters: int = 200
    reg_scale: float = 1e-6
    cov_type: str = "full"
    seed: int = 0
    collapse_floor: float = 1e-8

    def __post_init__(self):
        if self.cov_type not in ("full", "diag"):
            raise ValueError("cov_type must be 'full' or 'diag'")
        if self.tol < 0 or self.max_iters < 1:
            raise ValueError("tol must be nonnegative and max_iters positive")


@dataclass(frozen=True)
class GMMFit:
    means: np.ndarray
    covs: np.ndarray
    weights: np.ndarray
    log_likelihood: float
    iterations: int


def _kmeans_pp_centers(points: np.ndarray, L: int, rng: np.random.Generator) -> np.ndarray:
    centers = [points[rng.integers(points.shape[0])]]
    for _ in range(1, L):
        d2 = np.min(
            ((points[:, None, :] - np.asarray(centers)[None, :, :]) ** 2).sum(-1), axis=1
        )
        total = d2.sum()
        if total <= 0.0:  # all points coincide with a chosen center
            centers.append(points[rng.integers(points.shape[0])])
            continue
        centers.append(points[np.searchsorted(np.cumsum(d2 / total), rng.random())])
    return np.asarray(centers)


def _component_loglik(points: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    chol = spd_cholesky(cov)
    centered = points - mean
    solved = np.linalg.solve(chol, centered.T)
    quad = (solved**2).sum(axis=0)
    logdet = 2.0 * np.log(np.diag(chol)).sum()
    d = points.shape[1]
    return -0.5 * (d * math.log(2.0 * math.pi) + logdet + quad)


def fit_gmm(points, L: int, config: GMMConfig | None = None) -> GMMFit:
    """Fit an L-component Gaussian mixture by EM.

    Means are seeded by k-means++, covariances start at the shared spherical
    global variance, weights start uniform. A component whose responsibility
    mass falls under collapse_floor is reinitialized from a random point and
    logged. The per-iteration log-likelihood is nondecreasing up to round-off.
    """
    config = config or GMMConfig()
    X = np.asarray(points, dtype=float)
    if X.ndim != 2:
        raise ValueError("points must be (m, d)")
    m, d = X.shape
    if m < L:
        raise ValueError("need at least L points")
    rng = np.random.default_rng(config.seed)

    global_cov = np.atleast_2d(np.cov(X.T)) if m > 1 else np.eye(d)
    reg = config.reg_scale * float(np.trace(global_cov)) / d
    if reg <= 0.0:
        reg = config.reg_scale
    spherical = (float(np.trace(global_cov)) / d or 1.0) + reg

    means = _kmeans_pp_centers(X, L, rng)
    covs = np.tile(spherical * np.eye(d), (L, 1, 1))
    weights = np.full(L, 1.0 / L)

    prev_ll = -np.inf
    iterations = 0
    for iterations in range(1, config.max_iters + 1):
        log_resp = np.stack(
            [np.log(weights[s]) + _component_loglik(X, means[s], covs[s]) for s in range(L)],
            axis=1,
        )
        row_lse = logsumexp(log_resp, axis=1)
        total_ll = float(row_lse.sum())
        resp = np.exp(log_resp - row_lse[:, None])

        mass = resp.sum(axis=0)
        for s in range(L):
            if mass[s] < config.collapse_floor:
                logger.warning("component %d collapsed; reinitializing from a random point", s)
                means[s] = X[rng.integers(m)]
                covs[s] = spherical * np.eye(d)
                mass[s] = 1.0
                weights[s] = 1.0 / m
                continue
            means[s] = resp[:, s] @ X / mass[s]
            centered = X - means[s]
            cov = (resp[:, s][:, None] * centered).T @ centered / mass[s]
            cov = 0.5 * (cov + cov.T) + reg * np.eye(d)
            if config.cov_type == "diag":
                cov = np.diag(np.diag(cov))
            covs[s] = cov
            weights[s] = mass[s] / m
        weights = weights / weights.sum()

        if total_ll - prev_ll < config.tol and iterations > 1:
            prev_ll = total_ll
            break
        prev_ll = total_ll

    return GMMFit(
        means=means,
        covs=covs,
        weights=weights,
        log_likelihood=prev_ll,
        iterations=iterations,
    )


def build_mixture_prior(fit: GMMFit, sigma: float) -> GaussianMixturePrior:
    """Package a GMM fit as a sampling prior; fit weights become the latent prior."""
    return GaussianMixturePrior(
        means=fit.means,
        covs=fit.covs,
        latent_prior=normalize(np.log(fit.weights)),
        sigma=sigma,
    )


def save_prior(prior: GaussianMixturePrior, path) -> None:
    """Write the versioned field-tagged prior file (JSON, round-trip floats)."""
    payload = {
        "format": PRIOR_FORMAT,
        "version": PRIOR_VERSION,
        "d": prior.dim,
        "L": prior.num_components,
        "sigma": prior.sigma,
        "log_weights": prior.latent_prior.log_w.tolist(),
        "components": [
            {
                "mean": prior.means[s].tolist(),
                "cov": prior.covs[s].ravel().tolist(),  # row-major
            }
            for s in range(prior.num_components)
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def load_prior(path) -> GaussianMixturePrior:
    """Read a prior file; the reload is bit-identical to what was saved."""
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read prior file {path}: {exc}") from exc
    if payload.get("format") != PRIOR_FORMAT:
        raise ConfigError(f"{path} is not a {PRIOR_FORMAT} file")
    if payload.get("version") != PRIOR_VERSION:
        raise ConfigError(f"unsupported prior version {payload.get('version')!r}")
    try:
        d = int(payload["d"])
        L = int(payload["L"])
        sigma = float(payload["sigma"])
        log_w = np.asarray(payload["log_weights"], dtype=float)
        means = np.asarray([c["mean"] for c in payload["components"]], dtype=float)
        covs = np.asarray(
            [np.asarray(c["cov"], dtype=float).reshape(d, d) for c in payload["components"]]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed prior file {path}: {exc}") from exc
    if means.shape != (L, d) or log_w.shape != (L,):
        raise ConfigError(f"prior file {path} has inconsistent shapes")
    return GaussianMixturePrior(
        means=means,
        covs=covs,
        latent_prior=MixtureWeights(log_w),
        sigma=sigma,
    )
