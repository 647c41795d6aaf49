"""Test-time instrumentation for latent-state coverage.

Tracks, per latent component, the running over-estimation total G (how far the
component's width-discounted predicted reward exceeded realized reward while it
was the sampled component) and visit counts N. The confidence set keeps the
components whose G stays under a sqrt(N log n) threshold. Purely observational:
nothing here ever influences action selection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np


def bandit_eta(n, d: int) -> float:
    """Default width scaling for the bandit statistic: sqrt(2 log n / log(d n))."""
    if n < 2 or d < 1 or d * n <= 1.0:
        raise ValueError("bandit eta requires n >= 2 and d*n > 1")
    return math.sqrt(2.0 * math.log(n) / math.log(d * n))


MDP_ETA = math.sqrt(2.0)


@dataclass(frozen=True)
class LatentDiagnostics:
    """Running G and N vectors plus the horizon and width scaling eta."""

    G: np.ndarray
    N: np.ndarray
    n: int
    eta: float

    def __post_init__(self):
        G = np.asarray(self.G, dtype=float)
        N = np.asarray(self.N, dtype=np.int64)
        if G.ndim != 1 or G.shape != N.shape:
            raise ValueError("G and N must be matching 1-d vectors")
        if N.min() < 0:
            raise ValueError("visit counts must be nonnegative")
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "N", N)

    @staticmethod
    def for_bandit(num_components: int, n: int, d: int) -> "LatentDiagnostics":
        return LatentDiagnostics(
            G=np.zeros(num_components),
            N=np.zeros(num_components, dtype=np.int64),
            n=int(n),
            eta=bandit_eta(n, d),
        )

    @staticmethod
    def for_mdp(num_components: int, n: int) -> "LatentDiagnostics":
        return LatentDiagnostics(
            G=np.zeros(num_components),
            N=np.zeros(num_components, dtype=np.int64),
            n=int(n),
            eta=MDP_ETA,
        )


def _check_finite(*values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ValueError("diagnostics inputs must be finite")


def record_bandit_round(
    diag: LatentDiagnostics, s_sampled: int, mu_bar: float, width: float, y: float
) -> LatentDiagnostics:
    """G[s] += mu_bar - eta*width - y for the sampled component; N[s] += 1."""
    _check_finite(mu_bar, width, y)
    G = diag.G.copy()
    N = diag.N.copy()
    G[s_sampled] += mu_bar - diag.eta * width - y
    N[s_sampled] += 1
    return replace(diag, G=G, N=N)


def record_mdp_episode(
    diag: LatentDiagnostics,
    s_sampled: int,
    vbar: float,
    width_sum: float,
    return_: float,
    h: int,
) -> LatentDiagnostics:
    """G[s] += vbar - h*eta*width_sum - return_ (eta defaults to sqrt(2))."""
    _check_finite(vbar, width_sum, return_)
    if h < 1:
        raise ValueError("horizon must be at least 1")
    G = diag.G.copy()
    N = diag.N.copy()
    G[s_sampled] += vbar - h * diag.eta * width_sum - return_
    N[s_sampled] += 1
    return replace(diag, G=G, N=N)


def confidence_set(diag: LatentDiagnostics, setting: str, sigma_or_h: float) -> set:
    """Components whose G stays at or under the sqrt(N log n) threshold.

    Bandit threshold: 2 sigma sqrt(N log n). MDP threshold: sqrt(h N log n).
    The comparison is inclusive.
    """
    if diag.n < 2:
        raise ValueError("confidence set requires n >= 2")
    log_n = math.log(diag.n)
    if setting == "bandit":
        thresholds = 2.0 * sigma_or_h * np.sqrt(diag.N * log_n)
    elif setting == "mdp":
        thresholds = np.sqrt(sigma_or_h * diag.N * log_n)
    else:
        raise ValueError("setting must be 'bandit' or 'mdp'")
    return {int(s) for s in np.flatnonzero(diag.G <= thresholds)}
