"""Closed-form evaluators of the regret upper bounds.

Used to overlay scaled bound curves on empirical regret sweeps. The additive
polylogarithmic constant from the full proofs is omitted by default; the
optional full-constants mode adds the trailing terms of the linear-bandit
analysis. Shape comparisons are unaffected either way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class BoundInputsLinear:
    """n rounds, ambient dim d, L components, noise sd, action-norm bound kappa,
    and the largest prior-covariance eigenvalue over components."""

    n: int
    d: int
    L: int
    sigma: float
    kappa: float
    lambda0max: float

    def __post_init__(self):
        if min(self.n, self.d, self.L) < 1:
            raise ValueError("n, d, L must be positive integers")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ValueError("sigma must be positive")
        if not (self.kappa > 0 and math.isfinite(self.kappa)):
            raise ValueError("kappa must be positive")
        if not (self.lambda0max >= 0 and math.isfinite(self.lambda0max)):
            raise ValueError("lambda0max must be nonnegative")
        if self.d * self.n <= 1:
            raise ValueError("d*n must exceed 1")


@dataclass(frozen=True)
class BoundInputsMDP:
    """n episodes, state/action counts, horizon, L components, and the smallest
    prior pseudo-count mass over components and state-action pairs."""

    n: int
    nX: int
    nA: int
    h: int
    L: int
    Lambda0min: float

    def __post_init__(self):
        if min(self.n, self.nX, self.nA, self.h, self.L) < 1:
            raise ValueError("n, nX, nA, h, L must be positive integers")
        if not (self.Lambda0min > 0 and math.isfinite(self.Lambda0min)):
            raise ValueError("Lambda0min must be positive")


def theorem1_bound(inputs: BoundInputsLinear, full_constants: bool = False) -> float:
    """Regret upper bound for the linear-bandit setting.

    6 sigma d sqrt(n (1 + k^2 lam / s^2) log(1 + n k^2 lam / (s^2 d)) log(dn))
    + 2 sigma sqrt(L n log n), with lam = lambda0max. full_constants adds
    3L sqrt(2 k^2 lam d log(dn)) + 2 sqrt(k^2 lam d / (2 pi)) + 4 L kappa.
    """
    n, d, L = inputs.n, inputs.d, inputs.L
    sigma, kappa, lam = inputs.sigma, inputs.kappa, inputs.lambda0max
    s2 = sigma * sigma
    k2lam = kappa * kappa * lam
    first = 6.0 * sigma * d * math.sqrt(
        n * (1.0 + k2lam / s2) * math.log1p(n * k2lam / (s2 * d)) * math.log(d * n)
    )
    second = 2.0 * sigma * math.sqrt(L * n * math.log(n))
    total = first + second
    if full_constants:
        total += (
            3.0 * L * math.sqrt(2.0 * k2lam * d * math.log(d * n))
            + 2.0 * math.sqrt(k2lam * d / (2.0 * math.pi))
            + 4.0 * L * kappa
        )
    return total


def theorem2_bound(inputs: BoundInputsMDP) -> float:
    """Regret upper bound for the episodic tabular setting.

    4 nX h sqrt(2 nA n h log(4 nX nA n) log(1 + n h / (2 nX nA Lambda)))
    + sqrt(L n h log n), with Lambda = Lambda0min.
    """
    n, nX, nA, h, L = inputs.n, inputs.nX, inputs.nA, inputs.h, inputs.L
    lam = inputs.Lambda0min
    first = 4.0 * nX * h * math.sqrt(
        2.0 * nA * n * h * math.log(4.0 * nX * nA * n)
        * math.log1p(n * h / (2.0 * nX * nA * lam))
    )
    second = math.sqrt(L * n * h * math.log(n))
    return first + second
