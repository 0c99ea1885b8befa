"""Seedable single-step decoding strategies over externally produced logits.

Callers iterate; this module draws one token at a time from a logit vector
using greedy, top-k, or nucleus truncation. All randomness flows through the
threaded xoshiro256** generator, and every tie (boundary logits, equal
probabilities in the nucleus sort) breaks toward the lowest vocabulary index,
so a fixed (logits, config, seed) triple reproduces bit-for-bit anywhere.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ValidationFailure
from .prng import Xoshiro256StarStar

STRATEGIES = ("top_k", "nucleus", "greedy")

DEFAULT_TOP_K = 12
DEFAULT_TEMPERATURE = 0.6
DEFAULT_NUCLEUS_P = 0.9


@dataclass
class LogitVector:
    logits: np.ndarray
    vocab_ids: list[int] | None = None

    def __post_init__(self):
        self.logits = np.asarray(self.logits, dtype=np.float64).ravel()
        if self.logits.size < 1:
            raise ValidationFailure("logit vector must be non-empty")
        if not np.isfinite(self.logits).all():
            raise ValidationFailure("logit vector contains non-finite entries")


@dataclass
class SamplingConfig:
    strategy: str = "top_k"
    k: int = DEFAULT_TOP_K
    temperature: float = DEFAULT_TEMPERATURE
    p: float = DEFAULT_NUCLEUS_P
    seed: int = 0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValidationFailure(f"unknown strategy: {self.strategy!r}")
        if self.k < 1:
            raise ValidationFailure("k must be at least 1")
        if not self.temperature > 0:
            raise ValidationFailure("temperature must be positive")
        if not 0.0 < self.p <= 1.0:
            raise ValidationFailure("p must lie in (0, 1]")

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "k": self.k,
            "temperature": self.temperature,
            "p": self.p,
            "seed": self.seed,
        }


def softmax_temperature(v: LogitVector, temperature: float) -> np.ndarray:
    """Temperature-scaled softmax, max-shifted for stability; sums to 1."""
    if not temperature > 0:
        raise ValidationFailure("temperature must be positive")
    scaled = v.logits / temperature
    scaled = scaled - scaled.max()
    expd = np.exp(scaled)
    return expd / expd.sum()


def _inverse_cdf_draw(indices: list[int], probs: np.ndarray, rng: Xoshiro256StarStar) -> int:
    u = rng.next_double()
    acc = 0.0
    for idx, p in zip(indices, probs):
        acc += p
        if u < acc:
            return idx
    return indices[-1]  # guards the last sliver of rounding shortfall


def _top_k_support(v: LogitVector, k: int) -> list[int]:
    if k > v.logits.size:
        warnings.warn(f"k={k} exceeds vocabulary size {v.logits.size}; clamping")
        k = v.logits.size
    order = sorted(range(v.logits.size), key=lambda i: (-v.logits[i], i))
    return order[:k]


def top_k_sample(v: LogitVector, cfg: SamplingConfig, rng: Xoshiro256StarStar) -> int:
    """Draw one index from the renormalized top-k of the tempered distribution.

    Boundary ties pick the lowest index; the support never depends on the
    seed. The rng object is advanced in place.
    """
    support = _top_k_support(v, cfg.k)
    probs = softmax_temperature(v, cfg.temperature)[support]
    return _inverse_cdf_draw(support, probs / probs.sum(), rng)


def nucleus_sample(v: LogitVector, cfg: SamplingConfig, rng: Xoshiro256StarStar) -> int:
    """Draw one index from the smallest prefix with cumulative mass >= p.

    The prefix is taken over descending tempered probabilities (ties by
    lowest index), always includes at least one token, and includes the token
    that crosses the threshold. The rng object is advanced in place.
    """
    probs = softmax_temperature(v, cfg.temperature)
    order = sorted(range(probs.size), key=lambda i: (-probs[i], i))
    acc = 0.0
    support: list[int] = []
    for idx in order:
        support.append(idx)
        acc += probs[idx]
        if acc >= cfg.p:
            break
    chosen = probs[support]
    return _inverse_cdf_draw(support, chosen / chosen.sum(), rng)


def greedy_sample(v: LogitVector) -> int:
    """Argmax decoding; ties break toward the lowest index."""
    return int(np.argmax(v.logits))


def sample_token(v: LogitVector, cfg: SamplingConfig, rng: Xoshiro256StarStar) -> int:
    """Dispatch one sampling step according to the configured strategy."""
    if cfg.strategy == "greedy":
        return greedy_sample(v)
    if cfg.strategy == "top_k":
        return top_k_sample(v, cfg, rng)
    return nucleus_sample(v, cfg, rng)
