"""Bundled environments and the feature-file format.

Environment instances expose per-round action sets, true mean rewards for
regret accounting, and a reward sampler. Instance-level randomness (which
latent class is true, which rows appear each round) is drawn from the
environment stream so compared agents face identical instances; per-agent
reward noise comes from separate streams.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .linear import GaussianMixturePrior
from .mixture import MixtureWeights, normalize, sample_categorical
from .tabular import MDPMixturePrior, TabularMDP, mdp_posterior_init, sample_mdp


def synthetic_component_means(d: int, L: int) -> np.ndarray:
    """Component s has entry 0.9 at coordinate s and 0.1 elsewhere."""
    means = np.full((L, d), 0.1)
    means[np.arange(L), np.arange(L)] = 0.9
    return means


@dataclass(frozen=True)
class SyntheticLinearInstance:
    """Indicator-action linear bandit with a drawn (s_star, theta_star)."""

    means: np.ndarray
    sigma0: float
    sigma: float
    s_star: int
    theta_star: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.means.shape[1])

    @property
    def num_actions(self) -> int:
        return self.dim

    def round_actions(self, t: int) -> np.ndarray:
        del t
        return np.eye(self.dim)

    def true_means(self, t: int) -> np.ndarray:
        del t
        return self.theta_star

    def sample_reward(self, mean: float, rng: np.random.Generator) -> float:
        return float(mean + self.sigma * rng.standard_normal())

    def agent_prior(self) -> GaussianMixturePrior:
        if self.sigma0 <= 0.0:
            raise ConfigError("agents need sigma0 > 0 for a positive-definite prior")
        L, d = self.means.shape
        covs = np.tile(self.sigma0 * np.eye(d), (L, 1, 1))
        return GaussianMixturePrior(
            means=self.means,
            covs=covs,
            latent_prior=MixtureWeights.uniform(L),
            sigma=self.sigma,
        )


def synthetic_linear_env(
    d: int, L: int, sigma0: float, sigma: float, rng: np.random.Generator
) -> tuple[SyntheticLinearInstance, int, np.ndarray]:
    """Draw (S_*, theta_*) from the synthetic prior and return the instance.

    Latent prior is uniform and each component covariance is sigma0 I, i.e.
    sigma0 is the per-coordinate prior variance (the prior width, equal to the
    largest prior eigenvalue). The action set is the d indicator vectors and
    rewards are Gaussian with sd sigma.
    """
    if L > d:
        raise ConfigError("the synthetic environment requires L <= d")
    if L < 1 or d < 1:
        raise ConfigError("d and L must be positive")
    if sigma0 < 0 or sigma <= 0:
        raise ConfigError("sigma0 must be nonnegative and sigma positive")
    means = synthetic_component_means(d, L)
    s_star = int(rng.integers(L))
    theta_star = means[s_star] + math.sqrt(sigma0) * rng.standard_normal(d)
    instance = SyntheticLinearInstance(
        means=means, sigma0=sigma0, sigma=sigma, s_star=s_star, theta_star=theta_star
    )
    return instance, s_star, theta_star


@dataclass(frozen=True)
class FeatureTable:
    """Feature rows with integer class labels."""

    labels: np.ndarray
    features: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels)
        features = np.asarray(self.features, dtype=float)
        if features.ndim != 2 or features.shape[0] < 1:
            raise ValueError("features must be a nonempty (m, d) array")
        if labels.shape != (features.shape[0],):
            raise ValueError("labels must match the number of rows")
        object.__setattr__(self, "labels", labels.astype(np.int64))
        object.__setattr__(self, "features", features)

    @property
    def dim(self) -> int:
        return int(self.features.shape[1])

    @property
    def classes(self) -> np.ndarray:
        return np.unique(self.labels)


@functools.lru_cache(maxsize=8)
def load_feature_file(path: str) -> FeatureTable:
    """Parse a `class,f0,...,f{d-1}` CSV into a FeatureTable."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = [line.rstrip("\n").rstrip("\r") for line in fh]
    except OSError as exc:
        raise ConfigError(f"cannot read feature file {path}: {exc}") from exc
    lines = [line for line in lines if line]
    if not lines:
        raise ConfigError(f"feature file {path} is empty")
    header = lines[0].split(",")
    if header[0] != "class":
        raise ConfigError(f"feature file {path}: first column must be 'class'")
    d = len(header) - 1
    if d < 1 or header[1:] != [f"f{i}" for i in range(d)]:
        raise ConfigError(f"feature file {path}: feature columns must be f0..f{d - 1}")
    labels = []
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != d + 1:
            raise ConfigError(f"feature file {path}: line {lineno} has {len(parts)} fields")
        try:
            labels.append(int(parts[0]))
            rows.append([float(v) for v in parts[1:]])
        except ValueError as exc:
            raise ConfigError(f"feature file {path}: line {lineno}: {exc}") from exc
    return FeatureTable(labels=np.asarray(labels), features=np.asarray(rows))


def write_feature_file(path, table: FeatureTable) -> None:
    d = table.dim
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("class," + ",".join(f"f{i}" for i in range(d)) + "\n")
        for label, row in zip(table.labels, table.features):
            fh.write(str(int(label)) + "," + ",".join(format(v, ".17g") for v in row) + "\n")


def synthesize_feature_table(
    num_classes: int,
    rows_per_class: int,
    d: int,
    spread: float,
    rng: np.random.Generator,
) -> FeatureTable:
    """Clustered synthetic embeddings: unit-norm class centers plus noise."""
    if num_classes < 1 or rows_per_class < 1 or d < 1:
        raise ValueError("num_classes, rows_per_class, d must be positive")
    centers = rng.standard_normal((num_classes, d))
    centers /= np.sqrt((centers**2).sum(axis=1, keepdims=True))
    labels = np.repeat(np.arange(num_classes), rows_per_class)
    features = centers[labels] + spread * rng.standard_normal((labels.size, d))
    return FeatureTable(labels=labels, features=features)


@dataclass(frozen=True)
class FeatureBanditInstance:
    """One replication of the feature bandit: fixed round plan, drawn s_star."""

    table: FeatureTable
    row_indices: np.ndarray  # (n, k) feature-row index per round and slot
    s_star: int
    reward_hi: float
    reward_lo: float

    def round_actions(self, t: int) -> np.ndarray:
        return self.table.features[self.row_indices[t]]

    def true_means(self, t: int) -> np.ndarray:
        labels = self.table.labels[self.row_indices[t]]
        return np.where(labels == self.s_star, self.reward_hi, self.reward_lo)

    def sample_reward(self, mean: float, rng: np.random.Generator) -> float:
        return float(rng.random() < mean)


class FeatureBanditEnv:
    """Per-round action sets of k feature rows, one forced from class s_star."""

    def __init__(
        self,
        table: FeatureTable,
        reward_hi: float,
        reward_lo: float,
        k_actions: int,
        rng: np.random.Generator,
    ):
        if k_actions < 1:
            raise ConfigError("k_actions must be at least 1")
        if not (0.0 <= reward_lo <= 1.0 and 0.0 <= reward_hi <= 1.0):
            raise ConfigError("reward means must lie in [0, 1]")
        if table.classes.size < 1:
            raise ConfigError("feature table has no classes")
        self.table = table
        self.reward_hi = float(reward_hi)
        self.reward_lo = float(reward_lo)
        self.k_actions = int(k_actions)
        self.rng = rng

    def draw_instance(self, n: int) -> FeatureBanditInstance:
        classes = self.table.classes
        s_star = int(classes[self.rng.integers(classes.size)])
        class_rows = np.flatnonzero(self.table.labels == s_star)
        m = self.table.features.shape[0]
        forced = class_rows[self.rng.integers(class_rows.size, size=n)]
        indices = self.rng.integers(m, size=(n, self.k_actions))
        slots = self.rng.integers(self.k_actions, size=n)
        indices[np.arange(n), slots] = forced
        return FeatureBanditInstance(
            table=self.table,
            row_indices=indices,
            s_star=s_star,
            reward_hi=self.reward_hi,
            reward_lo=self.reward_lo,
        )


def feature_file_env(
    source,
    reward_hi: float = 0.9,
    reward_lo: float = 0.1,
    k_actions: int = 10,
    rng: np.random.Generator | None = None,
) -> FeatureBanditEnv:
    """Build the feature bandit from a feature file path or a FeatureTable."""
    table = source if isinstance(source, FeatureTable) else load_feature_file(str(source))
    if rng is None:
        rng = np.random.default_rng()
    return FeatureBanditEnv(table, reward_hi, reward_lo, k_actions, rng)


def draw_mdp_instance(
    prior: MDPMixturePrior, rng: np.random.Generator
) -> tuple[int, TabularMDP]:
    """Draw (S_*, M_*) from an MDP mixture prior."""
    s_star = sample_categorical(normalize(prior.latent_prior), rng)
    mdp = sample_mdp(mdp_posterior_init(prior), s_star, rng)
    return s_star, mdp
