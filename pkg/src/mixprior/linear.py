"""Gaussian linear bandit with a mixture prior.

Maintains the exact conjugate posterior of every component on shared
sufficient statistics (V, B), updates latent weights with Gaussian posterior
predictives, and runs the Thompson-sampling action loop: sample a latent
component, sample parameters from its conditional posterior, play the greedy
action, absorb the observation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .linalg import batched_spd_inverse, spd_cholesky
from .mixture import MixtureWeights, normalize, sample_categorical

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class ActionSet:
    """Finite action set, one row per action."""

    actions: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.actions, dtype=float)
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise ValueError("actions must form a nonempty (k, d) array")
        if not np.all(np.isfinite(arr)):
            raise ValueError("actions must be finite")
        object.__setattr__(self, "actions", arr)

    @property
    def kappa(self) -> float:
        """Largest Euclidean action norm."""
        return float(np.sqrt((self.actions**2).sum(axis=1).max()))

    def __len__(self) -> int:
        return int(self.actions.shape[0])


@dataclass(frozen=True)
class GaussianMixturePrior:
    """L-component Gaussian prior over model parameters plus a latent prior.

    Parameters
    ----------
    means : (L, d) array, one component mean per row.
    covs : (L, d, d) array of symmetric positive-definite covariances.
    latent_prior : MixtureWeights over the L components.
    sigma : observation-noise standard deviation (> 0).
    """

    means: np.ndarray
    covs: np.ndarray
    latent_prior: MixtureWeights
    sigma: float

    def __post_init__(self):
        means = np.asarray(self.means, dtype=float)
        covs = np.asarray(self.covs, dtype=float)
        if means.ndim != 2:
            raise ValueError("means must be (L, d)")
        L, d = means.shape
        if covs.shape != (L, d, d):
            raise ValueError("covs must be (L, d, d) matching means")
        if self.latent_prior.num_components != L:
            raise ValueError("latent prior length must match component count")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError("sigma must be positive and finite")
        if not (np.all(np.isfinite(means)) and np.all(np.isfinite(covs))):
            raise ValueError("prior parameters must be finite")
        scale = max(1.0, float(np.abs(covs).max()))
        if np.abs(covs - np.swapaxes(covs, -1, -2)).max() > 1e-10 * scale:
            raise ValueError("prior covariances must be symmetric")
        covs = 0.5 * (covs + np.swapaxes(covs, -1, -2))
        try:
            np.linalg.cholesky(covs)  # strict PD check, no jitter
        except np.linalg.LinAlgError:
            raise ValueError("prior covariances must be positive definite") from None
        norms = np.sqrt((means**2).sum(axis=1))
        if norms.max() > 1.0 + 1e-12:
            # Soft analysis assumption only; the algorithm is well-defined without it.
            warnings.warn(
                "component mean norm exceeds 1; regret-bound constants assume "
                "unit-bounded means",
                RuntimeWarning,
                stacklevel=2,
            )
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covs", covs)
        object.__setattr__(self, "sigma", float(self.sigma))

    @property
    def dim(self) -> int:
        return int(self.means.shape[1])

    @property
    def num_components(self) -> int:
        return int(self.means.shape[0])


@dataclass(frozen=True)
class LinearMixturePosterior:
    """Per-component Gaussian posteriors on shared statistics.

    V is the Gram matrix of played actions, B the reward-weighted action sum.
    For every component s: Sigma[s] = (covs[s]^-1 + V / sigma^2)^-1 and
    theta_bar[s] = Sigma[s] (covs[s]^-1 means[s] + B / sigma^2).
    """

    prior: GaussianMixturePrior
    weights: MixtureWeights
    theta_bar: np.ndarray
    Sigma: np.ndarray
    V: np.ndarray
    B: np.ndarray
    t: int
    prior_prec: np.ndarray = field(repr=False, default=None)
    prior_prec_mean: np.ndarray = field(repr=False, default=None)


def posterior_init(prior: GaussianMixturePrior) -> LinearMixturePosterior:
    """Fresh posterior equal to the prior: V = 0, B = 0, weights = latent prior."""
    d = prior.dim
    prec = batched_spd_inverse(prior.covs)
    prec_mean = np.einsum("lij,lj->li", prec, prior.means)
    return LinearMixturePosterior(
        prior=prior,
        weights=normalize(prior.latent_prior),
        theta_bar=prior.means.copy(),
        Sigma=prior.covs.copy(),
        V=np.zeros((d, d)),
        B=np.zeros(d),
        t=0,
        prior_prec=prec,
        prior_prec_mean=prec_mean,
    )


def _as_action(post: LinearMixturePosterior, a) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.shape != (post.prior.dim,):
        raise ValueError(f"action must be a vector of dimension {post.prior.dim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("action must be finite")
    return arr


def _predictive_logliks(post: LinearMixturePosterior, a: np.ndarray, y: float) -> np.ndarray:
    """Log posterior-predictive density of reward y for action a, per component."""
    mu = post.theta_bar @ a
    quad = np.einsum("lij,i,j->l", post.Sigma, a, a)
    var = np.maximum(quad, 0.0) + post.prior.sigma**2
    resid = y - mu
    return -0.5 * (_LOG_2PI + np.log(var) + resid * resid / var)


def predictive_loglik(post: LinearMixturePosterior, s: int, a, y: float) -> float:
    """log N(y; a.theta_bar[s], a.Sigma[s].a + sigma^2), before absorbing (a, y)."""
    if not (0 <= s < post.prior.num_components):
        raise ValueError("latent index out of range")
    if not np.isfinite(y):
        raise ValueError("reward must be finite")
    arr = _as_action(post, a)
    return float(_predictive_logliks(post, arr, float(y))[s])


def posterior_update(post: LinearMixturePosterior, a, y: float) -> LinearMixturePosterior:
    """Absorb one observation (a, y) into every component and the latent weights.

    Weights gain each component's predictive log-likelihood (evaluated before
    the observation is absorbed) and are renormalized.
    """
    arr = _as_action(post, a)
    if not np.isfinite(y):
        raise ValueError("reward must be finite")
    y = float(y)
    logliks = _predictive_logliks(post, arr, y)
    weights = normalize(post.weights.log_w + logliks)
    V = post.V + np.outer(arr, arr)
    B = post.B + arr * y
    inv_noise = post.prior.sigma**-2
    Sigma = batched_spd_inverse(post.prior_prec + inv_noise * V)
    theta_bar = np.einsum("lij,lj->li", Sigma, post.prior_prec_mean + inv_noise * B)
    return replace(
        post,
        weights=weights,
        theta_bar=theta_bar,
        Sigma=Sigma,
        V=V,
        B=B,
        t=post.t + 1,
    )


def sample_model(post: LinearMixturePosterior, rng) -> tuple[int, np.ndarray]:
    """Sample a latent index from the weights, then parameters from that component."""
    s = sample_categorical(post.weights, rng)
    cov = post.Sigma[s]
    if not cov.any():  # zero-covariance limit: degenerate at the mean
        return s, post.theta_bar[s].copy()
    chol = spd_cholesky(cov)
    theta = post.theta_bar[s] + chol @ rng.standard_normal(post.prior.dim)
    return s, theta


def select_action(theta, actions) -> int:
    """Index of the action maximizing a.theta; ties break to the lowest index."""
    arr = actions.actions if isinstance(actions, ActionSet) else np.asarray(actions, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise ValueError("actions must form a nonempty (k, d) array")
    return int(np.argmax(arr @ np.asarray(theta, dtype=float)))


def confidence_width(post: LinearMixturePosterior, s: int, a, n, d: int | None = None) -> float:
    """Posterior confidence width ||a||_Sigma[s] * sqrt(2 d log(d n))."""
    if not (0 <= s < post.prior.num_components):
        raise ValueError("latent index out of range")
    if d is None:
        d = post.prior.dim
    if d < 1 or n <= 0 or d * n <= 1.0:
        raise ValueError("confidence width requires d >= 1 and d*n > 1")
    arr = _as_action(post, a)
    quad = max(float(arr @ post.Sigma[s] @ arr), 0.0)
    return math.sqrt(quad) * math.sqrt(2.0 * d * math.log(d * n))


class MixtureTSAgent:
    """Thompson-sampling bandit agent over a Gaussian mixture prior.

    Each round: sample a latent component and parameters via sample_model,
    play the greedy action, then absorb the observation via posterior_update.
    """

    def __init__(self, prior: GaussianMixturePrior, rng: np.random.Generator):
        self.posterior = posterior_init(prior)
        self.rng = rng
        self.last_latent: int | None = None

    def act(self, actions) -> int:
        s, theta = sample_model(self.posterior, self.rng)
        self.last_latent = s
        return select_action(theta, actions)

    def observe(self, action_index: int, action, reward: float) -> None:
        del action_index  # identity of the chosen row is irrelevant here
        self.posterior = posterior_update(self.posterior, action, reward)
