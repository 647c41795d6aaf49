"""Finite-horizon tabular MDPs with a Beta/Dirichlet mixture posterior.

Observation counts are shared across mixture components; only the pseudo-count
priors differ. Latent weights update per step with Beta/Dirichlet posterior
predictives, which by the chain rule reproduces the exact episode marginal
likelihood. Includes backward-induction planning, exact policy evaluation,
and the two-component river-swim prior constructor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import NumericalError
from .mixture import MixtureWeights, normalize, sample_categorical

LEFT = 0
RIGHT = 1


@dataclass(frozen=True)
class TabularMDP:
    """Mean rewards (nX, nA), transitions (nX, nA, nX), horizon, start dist."""

    rewards: np.ndarray
    transitions: np.ndarray
    horizon: int
    start: np.ndarray

    def __post_init__(self):
        rewards = np.asarray(self.rewards, dtype=float)
        transitions = np.asarray(self.transitions, dtype=float)
        start = np.asarray(self.start, dtype=float)
        if rewards.ndim != 2:
            raise ValueError("rewards must be (nX, nA)")
        nX, nA = rewards.shape
        if transitions.shape != (nX, nA, nX):
            raise ValueError("transitions must be (nX, nA, nX)")
        if start.shape != (nX,):
            raise ValueError("start must be a length-nX distribution")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if rewards.min() < -1e-12 or rewards.max() > 1.0 + 1e-12:
            raise ValueError("mean rewards must lie in [0, 1]")
        if transitions.min() < -1e-12:
            raise ValueError("transition probabilities must be nonnegative")
        if np.abs(transitions.sum(axis=-1) - 1.0).max() > 1e-9:
            raise ValueError("every transition row must sum to 1")
        if abs(start.sum() - 1.0) > 1e-9 or start.min() < -1e-12:
            raise ValueError("start must be a probability distribution")
        object.__setattr__(self, "rewards", rewards)
        object.__setattr__(self, "transitions", transitions)
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "horizon", int(self.horizon))

    @property
    def num_states(self) -> int:
        return int(self.rewards.shape[0])

    @property
    def num_actions(self) -> int:
        return int(self.rewards.shape[1])


@dataclass(frozen=True)
class Policy:
    """Nonstationary policy: actions[i, x] is the action at step i in state x."""

    actions: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.actions)
        if arr.ndim != 2 or not np.issubdtype(arr.dtype, np.integer):
            raise ValueError("policy must be an integer (h, nX) table")
        object.__setattr__(self, "actions", arr.astype(np.int64))

    @property
    def horizon(self) -> int:
        return int(self.actions.shape[0])


@dataclass(frozen=True)
class MDPMixturePrior:
    """Per-component Beta/Dirichlet pseudo-counts plus a latent prior.

    alpha_r has shape (L, nX, nA, 2) with index r = observed reward outcome,
    so alpha_r[..., 1] counts reward-one observations. alpha_t has shape
    (L, nX, nA, nX). All pseudo-counts are strictly positive. horizon and
    start describe the episodic process so sampled MDPs are self-contained.
    """

    latent_prior: MixtureWeights
    alpha_r: np.ndarray
    alpha_t: np.ndarray
    horizon: int
    start: np.ndarray

    def __post_init__(self):
        alpha_r = np.asarray(self.alpha_r, dtype=float)
        alpha_t = np.asarray(self.alpha_t, dtype=float)
        start = np.asarray(self.start, dtype=float)
        if alpha_r.ndim != 4 or alpha_r.shape[-1] != 2:
            raise ValueError("alpha_r must be (L, nX, nA, 2)")
        L, nX, nA, _ = alpha_r.shape
        if alpha_t.shape != (L, nX, nA, nX):
            raise ValueError("alpha_t must be (L, nX, nA, nX)")
        if self.latent_prior.num_components != L:
            raise ValueError("latent prior length must match component count")
        if alpha_r.min() <= 0.0 or alpha_t.min() <= 0.0:
            raise ValueError("pseudo-counts must be strictly positive")
        if not (np.all(np.isfinite(alpha_r)) and np.all(np.isfinite(alpha_t))):
            raise ValueError("pseudo-counts must be finite")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if start.shape != (nX,) or abs(start.sum() - 1.0) > 1e-9 or start.min() < -1e-12:
            raise ValueError("start must be a length-nX probability distribution")
        object.__setattr__(self, "alpha_r", alpha_r)
        object.__setattr__(self, "alpha_t", alpha_t)
        object.__setattr__(self, "start", start)
        object.__setattr__(self, "horizon", int(self.horizon))

    @property
    def num_components(self) -> int:
        return int(self.alpha_r.shape[0])

    @property
    def num_states(self) -> int:
        return int(self.alpha_r.shape[1])

    @property
    def num_actions(self) -> int:
        return int(self.alpha_r.shape[2])


@dataclass(frozen=True)
class MDPMixturePosterior:
    """Shared observation counts on top of an MDPMixturePrior.

    Effective counts for component s are prior.alpha_r[s] + reward_counts and
    prior.alpha_t[s] + trans_counts: the data are shared, only priors differ.
    """

    prior: MDPMixturePrior
    weights: MixtureWeights
    reward_counts: np.ndarray
    trans_counts: np.ndarray
    t: int

    def effective_alpha_r(self, s: int) -> np.ndarray:
        return self.prior.alpha_r[s] + self.reward_counts

    def effective_alpha_t(self, s: int) -> np.ndarray:
        return self.prior.alpha_t[s] + self.trans_counts


def mdp_posterior_init(prior: MDPMixturePrior) -> MDPMixturePosterior:
    nX, nA = prior.num_states, prior.num_actions
    return MDPMixturePosterior(
        prior=prior,
        weights=normalize(prior.latent_prior),
        reward_counts=np.zeros((nX, nA, 2)),
        trans_counts=np.zeros((nX, nA, nX)),
        t=0,
    )


def posterior_update_step(
    post: MDPMixturePosterior, x: int, a: int, r: int, x_next: int
) -> MDPMixturePosterior:
    """Absorb one transition (x, a, r, x_next).

    Latent weights gain log BetaPred(r) + log DirPred(x_next) per component,
    with predictives evaluated on the counts before the increment.
    """
    nX, nA = post.prior.num_states, post.prior.num_actions
    if not (0 <= x < nX and 0 <= a < nA and 0 <= x_next < nX):
        raise ValueError("state or action index out of range")
    if r not in (0, 1):
        raise ValueError("reward outcome must be 0 or 1")
    ar = post.prior.alpha_r[:, x, a, :] + post.reward_counts[x, a, :]
    at = post.prior.alpha_t[:, x, a, :] + post.trans_counts[x, a, :]
    log_pred = (
        np.log(ar[:, r])
        - np.log(ar.sum(axis=1))
        + np.log(at[:, x_next])
        - np.log(at.sum(axis=1))
    )
    weights = normalize(post.weights.log_w + log_pred)
    reward_counts = post.reward_counts.copy()
    reward_counts[x, a, r] += 1.0
    trans_counts = post.trans_counts.copy()
    trans_counts[x, a, x_next] += 1.0
    return replace(
        post,
        weights=weights,
        reward_counts=reward_counts,
        trans_counts=trans_counts,
        t=post.t + 1,
    )


def sample_mdp(post: MDPMixturePosterior, s: int, rng) -> TabularMDP:
    """Draw an MDP from component s: Beta mean rewards, Dirichlet transition rows."""
    if not (0 <= s < post.prior.num_components):
        raise ValueError("latent index out of range")
    ar = post.effective_alpha_r(s)
    at = post.effective_alpha_t(s)
    rewards = rng.beta(ar[..., 1], ar[..., 0])
    gam = rng.gamma(shape=at)  # Dirichlet rows via normalized Gamma draws
    row_sums = gam.sum(axis=-1, keepdims=True)
    if np.any(row_sums == 0.0):
        raise NumericalError("Dirichlet row underflowed to zero mass")
    return TabularMDP(
        rewards=rewards,
        transitions=gam / row_sums,
        horizon=post.prior.horizon,
        start=post.prior.start,
    )


def plan(mdp: TabularMDP) -> Policy:
    """Optimal nonstationary policy by backward induction; ties break low."""
    nX = mdp.num_states
    values = np.zeros(nX)
    actions = np.empty((mdp.horizon, nX), dtype=np.int64)
    for i in reversed(range(mdp.horizon)):
        q = mdp.rewards + mdp.transitions @ values
        actions[i] = np.argmax(q, axis=1)
        values = q[np.arange(nX), actions[i]]
    return Policy(actions)


def policy_value(mdp: TabularMDP, policy: Policy) -> float:
    """Exact expected h-step return by forward distribution propagation."""
    if policy.actions.shape != (mdp.horizon, mdp.num_states):
        raise ValueError("policy shape must match (horizon, nX)")
    if policy.actions.min() < 0 or policy.actions.max() >= mdp.num_actions:
        raise ValueError("policy contains an invalid action index")
    idx = np.arange(mdp.num_states)
    dist = mdp.start.copy()
    total = 0.0
    for i in range(mdp.horizon):
        acts = policy.actions[i]
        total += float(dist @ mdp.rewards[idx, acts])
        dist = dist @ mdp.transitions[idx, acts]
    return total


def mdp_confidence_widths(post: MDPMixturePosterior, s: int, n) -> tuple[np.ndarray, np.ndarray]:
    """Reward and transition confidence widths per (x, a) for component s.

    c = sqrt(2 log(2 nX nA n) / (||alpha_r||_1 + 1)),
    phi = sqrt(4 nX log(4 nX nA n) / (||alpha_t||_1 + 1)).
    """
    if not (0 <= s < post.prior.num_components):
        raise ValueError("latent index out of range")
    if n < 1:
        raise ValueError("n must be at least 1")
    nX, nA = post.prior.num_states, post.prior.num_actions
    ar_mass = post.effective_alpha_r(s).sum(axis=-1)
    at_mass = post.effective_alpha_t(s).sum(axis=-1)
    c = np.sqrt(2.0 * math.log(2.0 * nX * nA * n) / (ar_mass + 1.0))
    phi = np.sqrt(4.0 * nX * math.log(4.0 * nX * nA * n) / (at_mass + 1.0))
    return c, phi


def _beta_counts(mean: float, scale: float) -> np.ndarray:
    # index 1 = reward-one count; total mass = scale, so max entry <= scale
    return np.array([(1.0 - mean) * scale, mean * scale])


def riverswim_prior(
    num_states: int, concentration_scale: float = 10.0, horizon: int = 20
) -> tuple[MDPMixturePrior, dict]:
    """Two-component river-swim prior: current flowing left, and its mirror.

    Component "current-left": the with-current action (LEFT) moves one state
    left with probability 1 and earns mean reward 0.005 on the leftmost
    self-loop; the against-current action (RIGHT) advances with probability
    0.35 (0.4 at both endpoints), stays with 0.6, slips back with 0.05, and
    earns mean reward 0.9 on the far-end stay. All other mean rewards are
    approximately zero. Pseudo-counts are probabilities times
    concentration_scale, with zero entries floored at a small epsilon so every
    Dirichlet parameter stays strictly positive; the floor keeps row means
    within 1% of the target probabilities.

    Returns the prior and a description dict recording the exact pseudo-counts.
    """
    if num_states < 3:
        raise ValueError("river swim needs at least 3 states")
    if not (0.0 < concentration_scale <= 10.0):
        raise ValueError("concentration_scale must lie in (0, 10]")
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    nX, nA = int(num_states), 2
    scale = float(concentration_scale)
    floor = min(1e-3, 1e-2 / (nX - 1)) * scale

    trans_left = np.zeros((nX, nA, nX))
    rew_left = np.zeros((nX, nA, 2))
    small, big = 0.005, 0.9
    for x in range(nX):
        # with-current (LEFT): deterministic one-step drift toward state 0
        target = max(x - 1, 0)
        trans_left[x, LEFT, target] = 1.0
        rew_left[x, LEFT] = _beta_counts(small if x == 0 else 0.0, scale)
        # against-current (RIGHT)
        if x == nX - 1:
            trans_left[x, RIGHT, x] = 0.6
            trans_left[x, RIGHT, x - 1] = 0.4
            rew_left[x, RIGHT] = _beta_counts(big, scale)
        elif x == 0:
            trans_left[x, RIGHT, x + 1] = 0.4
            trans_left[x, RIGHT, x] = 0.6
            rew_left[x, RIGHT] = _beta_counts(0.0, scale)
        else:
            trans_left[x, RIGHT, x + 1] = 0.35
            trans_left[x, RIGHT, x] = 0.6
            trans_left[x, RIGHT, x - 1] = 0.05
            rew_left[x, RIGHT] = _beta_counts(0.0, scale)

    alpha_t_left = trans_left * scale
    alpha_t_left[alpha_t_left == 0.0] = floor
    alpha_r_left = rew_left
    alpha_r_left[alpha_r_left == 0.0] = floor

    # mirror: reverse the state axis and swap action directions
    alpha_t_right = alpha_t_left[::-1, ::-1, ::-1].copy()
    alpha_r_right = alpha_r_left[::-1, ::-1, :].copy()

    start = np.zeros(nX)
    start[nX // 2] = 1.0
    prior = MDPMixturePrior(
        latent_prior=MixtureWeights.uniform(2),
        alpha_r=np.stack([alpha_r_left, alpha_r_right]),
        alpha_t=np.stack([alpha_t_left, alpha_t_right]),
        horizon=horizon,
        start=start,
    )
    description = {
        "kind": "riverswim",
        "num_states": nX,
        "num_actions": nA,
        "horizon": int(horizon),
        "concentration_scale": scale,
        "pseudo_count_floor": floor,
        "start_state": nX // 2,
        "components": ["current-left", "current-right"],
        "actions": ["left", "right"],
        "alpha_r": prior.alpha_r.tolist(),
        "alpha_t": prior.alpha_t.tolist(),
    }
    return prior, description


class MixtureTSMDPAgent:
    """Episodic Thompson-sampling agent over an MDP mixture prior.

    Each episode: sample a latent component and an MDP from its effective
    counts, plan once by backward induction, then absorb every step.
    """

    def __init__(self, prior: MDPMixturePrior, rng: np.random.Generator):
        self.posterior = mdp_posterior_init(prior)
        self.rng = rng
        self.last_latent: int | None = None
        self.last_policy: Policy | None = None

    def begin_episode(self) -> Policy:
        s = sample_categorical(self.posterior.weights, self.rng)
        self.last_latent = s
        mdp = sample_mdp(self.posterior, s, self.rng)
        self.last_policy = plan(mdp)
        return self.last_policy

    def observe(self, x: int, a: int, r: int, x_next: int) -> None:
        self.posterior = posterior_update_step(self.posterior, x, a, r, x_next)
