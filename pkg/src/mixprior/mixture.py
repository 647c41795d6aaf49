"""Log-domain mixture weights, categorical sampling, and reproducible RNG streams.

Weights over latent states are kept as natural-log probabilities and renormalized
after every update: predictive log-likelihoods drift apart by hundreds of nats
within a few rounds, so linear-domain weights would underflow.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateWeightsError

# A normalize pass below this residual is a no-op, which makes normalize an
# exact fixed point while staying far inside the 1e-9 logsumexp invariant.
_RESIDUAL_TOL = 1e-12


def _logsumexp(arr: np.ndarray) -> float:
    # max-shifted; callers guarantee at least one finite entry and no +inf/NaN
    m = float(arr.max())
    return m + float(np.log(np.exp(arr - m).sum()))


@dataclass(frozen=True)
class MixtureWeights:
    """Normalized log-probability vector over latent states.

    Entries are finite or -inf (a component may collapse to zero mass, but
    never all of them). Construct via normalize() unless the input is already
    normalized.
    """

    log_w: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.log_w, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("log_w must be a nonempty 1-d vector")
        object.__setattr__(self, "log_w", arr)

    @property
    def num_components(self) -> int:
        return int(self.log_w.size)

    def probabilities(self) -> np.ndarray:
        return np.exp(self.log_w)

    @staticmethod
    def uniform(num_components: int) -> "MixtureWeights":
        if num_components < 1:
            raise ValueError("need at least one component")
        return MixtureWeights(np.full(num_components, -np.log(num_components)))


def normalize(log_w) -> MixtureWeights:
    """Normalize raw log-weights so that logsumexp(log_w) = 0.

    Accepts a raw vector or MixtureWeights; the output differs from the input
    by a single additive constant. Already-normalized input (residual within
    1e-12) is returned unchanged, so normalize(normalize(x)) == normalize(x)
    bit for bit.
    """
    raw = log_w.log_w if isinstance(log_w, MixtureWeights) else log_w
    arr = np.asarray(raw, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError("log weights must be a nonempty 1-d vector")
    if np.isnan(arr).any():
        raise DegenerateWeightsError("NaN in mixture log-weights")
    if np.isposinf(arr).any():
        raise DegenerateWeightsError("+inf in mixture log-weights")
    if np.all(np.isneginf(arr)):
        raise DegenerateWeightsError("all mixture components have zero mass")
    out = arr
    for _ in range(3):
        residual = _logsumexp(out)
        if abs(residual) <= _RESIDUAL_TOL:
            break
        out = out - residual
    return MixtureWeights(out)


def sample_categorical(weights: MixtureWeights, rng) -> int:
    """Draw a latent index with probabilities exp(log_w).

    `rng` is a numpy Generator; an RngStream is accepted and opened fresh.
    The returned index always has nonzero mass.
    """
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    p = weights.probabilities()
    total = float(p.sum())
    if not np.isfinite(total) or total <= 0.0:
        raise DegenerateWeightsError("cannot sample from zero-mass weights")
    cum = np.cumsum(p)
    u = gen.random() * cum[-1]
    idx = int(np.searchsorted(cum, u, side="right"))
    idx = min(idx, p.size - 1)
    # searchsorted cannot land on an interior zero-mass cell; only boundary
    # rounding at the top can, so walk back to the nearest positive entry.
    while p[idx] == 0.0:
        idx -= 1
    return idx


@dataclass(frozen=True)
class RngStream:
    """Deterministic, independent random stream keyed by (seed, stream_id).

    Counter-based (Philox) so that replications and agents each get an
    independent stream regardless of execution order.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            value = getattr(self, name)
            if not (0 <= int(value) < 2**64):
                raise ValueError(f"{name} must be an unsigned 64-bit integer")

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.Philox(seq))


def derive_stream_id(*parts) -> int:
    """Stable 64-bit stream id from a mixed tuple of ints and strings."""
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        if isinstance(part, str):
            data = part.encode("utf-8")
            h.update(struct.pack(">cI", b"s", len(data)))
            h.update(data)
        else:
            h.update(struct.pack(">cq", b"i", int(part)))
    return int.from_bytes(h.digest(), "big")
