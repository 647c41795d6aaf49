"""Comparison agents: unimodal Thompson sampling, exponential-weights experts
(Exp4), Exp4 over posterior-adapting experts, and uniform-prior posterior
sampling for MDPs."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import NumericalError
from .linear import (
    GaussianMixturePrior,
    MixtureTSAgent,
    posterior_init,
    posterior_update,
)
from .mixture import MixtureWeights, normalize
from .tabular import MDPMixturePrior, MixtureTSMDPAgent


def unimodal_ts_agent(mean, cov, sigma: float, rng: np.random.Generator) -> MixtureTSAgent:
    """Thompson sampling with a single Gaussian prior component.

    Behaves exactly as the mixture agent with one component; the latent
    weights stay the single atom [0] forever.
    """
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    prior = GaussianMixturePrior(
        means=mean[None, :],
        covs=cov[None, :, :],
        latent_prior=MixtureWeights.uniform(1),
        sigma=sigma,
    )
    return MixtureTSAgent(prior, rng)


@dataclass(frozen=True)
class Exp4State:
    """Expert log-weights plus the exponential-weights hyperparameters.

    num_actions is the per-round action count, fixed in the bundled
    environments; the exploration term spreads gamma/num_actions mass
    uniformly.
    """

    log_w: np.ndarray
    learning_rate: float
    gamma: float
    num_actions: int

    def __post_init__(self):
        arr = np.asarray(self.log_w, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("log_w must be a nonempty vector")
        if not (self.learning_rate > 0 and math.isfinite(self.learning_rate)):
            raise ValueError("learning_rate must be positive")
        if not (0.0 <= self.gamma < 1.0):
            raise ValueError("gamma must lie in [0, 1)")
        if self.num_actions < 1:
            raise ValueError("num_actions must be at least 1")
        object.__setattr__(self, "log_w", normalize(arr).log_w)

    @property
    def num_experts(self) -> int:
        return int(self.log_w.size)


def exp4_defaults(num_experts: int, n: int, num_actions: int) -> tuple[float, float]:
    """Standard anytime-safe learning rate and exploration for n rounds.

    gamma is clamped below 1 to honor the gamma < 1 invariant at small n;
    a single expert gets a unit learning rate since its weight never moves.
    """
    if num_experts < 1 or n < 1 or num_actions < 1:
        raise ValueError("num_experts, n, num_actions must be positive")
    if num_experts == 1:
        return 1.0, 0.0
    log_l = math.log(num_experts)
    eta = math.sqrt(2.0 * log_l / (n * num_actions))
    gamma = min(0.999, math.sqrt(num_experts * log_l / n))
    return eta, gamma


def exp4_init(
    num_experts: int, num_actions: int, learning_rate: float, gamma: float
) -> Exp4State:
    return Exp4State(
        log_w=MixtureWeights.uniform(num_experts).log_w,
        learning_rate=learning_rate,
        gamma=gamma,
        num_actions=num_actions,
    )


def exp4_action_distribution(state: Exp4State, expert_actions) -> np.ndarray:
    """p(a) = (1-gamma) sum_s w_s 1{expert s picks a} + gamma/num_actions."""
    acts = np.asarray(expert_actions)
    if acts.shape != (state.num_experts,):
        raise ValueError("need one action index per expert")
    if acts.min() < 0 or acts.max() >= state.num_actions:
        raise ValueError("expert action index out of range")
    vote = np.zeros(state.num_actions)
    np.add.at(vote, acts, np.exp(state.log_w))
    return (1.0 - state.gamma) * vote + state.gamma / state.num_actions


def exp4_step(
    state: Exp4State, expert_actions, chosen_reward: float, chosen_action: int
) -> Exp4State:
    """Importance-weighted exponential update after observing one reward.

    Each expert that voted for the chosen action is credited
    reward / p(chosen action); log-weights move by learning_rate times the
    credit and are renormalized. Rewards are clamped to [0, 1] with a warning.
    """
    acts = np.asarray(expert_actions)
    p = exp4_action_distribution(state, acts)
    if not (0 <= chosen_action < state.num_actions):
        raise ValueError("chosen action index out of range")
    reward = float(chosen_reward)
    if reward < 0.0 or reward > 1.0:
        warnings.warn(
            "reward outside [0, 1] clamped for the exponential-weights update",
            RuntimeWarning,
            stacklevel=2,
        )
        reward = min(1.0, max(0.0, reward))
    p_chosen = float(p[chosen_action])
    if p_chosen <= 0.0:
        raise NumericalError("chosen action has zero selection probability")
    estimates = reward * (acts == chosen_action) / p_chosen
    log_w = normalize(state.log_w + state.learning_rate * estimates).log_w
    return replace(state, log_w=log_w)


def _sample_index(probabilities: np.ndarray, rng: np.random.Generator) -> int:
    cum = np.cumsum(probabilities)
    u = rng.random() * cum[-1]
    idx = min(int(np.searchsorted(cum, u, side="right")), probabilities.size - 1)
    while probabilities[idx] == 0.0:
        idx -= 1
    return idx


class Exp4Agent:
    """Exponential weighting over fixed experts.

    Expert s deterministically proposes the action maximizing a.means[s];
    the master samples from the exploration-smoothed expert vote.
    """

    def __init__(
        self,
        expert_means,
        n: int,
        num_actions: int,
        rng: np.random.Generator,
        learning_rate: float | None = None,
        gamma: float | None = None,
    ):
        self.expert_means = np.asarray(expert_means, dtype=float)
        if self.expert_means.ndim != 2:
            raise ValueError("expert_means must be (L, d)")
        eta_default, gamma_default = exp4_defaults(
            self.expert_means.shape[0], n, num_actions
        )
        self.state = exp4_init(
            self.expert_means.shape[0],
            num_actions,
            learning_rate if learning_rate is not None else eta_default,
            gamma if gamma is not None else gamma_default,
        )
        self.rng = rng
        self._last_experts: np.ndarray | None = None

    def _expert_votes(self, actions: np.ndarray) -> np.ndarray:
        scores = self.expert_means @ actions.T  # (L, k)
        return np.argmax(scores, axis=1)

    def act(self, actions) -> int:
        arr = actions.actions if hasattr(actions, "actions") else np.asarray(actions)
        self._last_experts = self._expert_votes(arr)
        p = exp4_action_distribution(self.state, self._last_experts)
        return _sample_index(p, self.rng)

    def observe(self, action_index: int, action, reward: float) -> None:
        del action
        self.state = exp4_step(self.state, self._last_experts, reward, action_index)


class CorralExp4Agent(Exp4Agent):
    """Exp4 master over experts that track per-component posterior means.

    Every round, all components absorb the observation through the shared
    conjugate update, and expert s proposes argmax a.theta_bar[s].
    """

    def __init__(
        self,
        prior: GaussianMixturePrior,
        n: int,
        num_actions: int,
        rng: np.random.Generator,
        learning_rate: float | None = None,
        gamma: float | None = None,
    ):
        super().__init__(
            prior.means, n, num_actions, rng, learning_rate=learning_rate, gamma=gamma
        )
        self.posterior = posterior_init(prior)

    def _expert_votes(self, actions: np.ndarray) -> np.ndarray:
        scores = self.posterior.theta_bar @ actions.T
        return np.argmax(scores, axis=1)

    def observe(self, action_index: int, action, reward: float) -> None:
        self.posterior = posterior_update(self.posterior, action, reward)
        self.state = exp4_step(self.state, self._last_experts, reward, action_index)


def psrl_agent(nX: int, nA: int, h: int, rng: np.random.Generator) -> MixtureTSMDPAgent:
    """Posterior sampling with a single uniform component.

    Beta(1, 1) reward prior and all-ones Dirichlet transition prior; the prior
    predictive of any reward outcome is 1/2 and of any next state is 1/nX.
    """
    if min(nX, nA, h) < 1:
        raise ValueError("nX, nA, h must be positive")
    prior = MDPMixturePrior(
        latent_prior=MixtureWeights.uniform(1),
        alpha_r=np.ones((1, nX, nA, 2)),
        alpha_t=np.ones((1, nX, nA, nX)),
        horizon=h,
        start=np.full(nX, 1.0 / nX),
    )
    return MixtureTSMDPAgent(prior, rng)
