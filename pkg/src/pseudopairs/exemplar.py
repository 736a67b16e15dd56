"""Similarity-weighted one-shot exemplar selection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from pseudopairs.errors import DataError
from pseudopairs.retrieval import Hit


@dataclass(frozen=True)
class SelectionPolicy:
    """Draw probabilities are ``s_i ** (1 / temperature)`` normalized over the hits."""

    temperature: float = 1.0
    seed: int = 0
    zero_fallback: str = "uniform"

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        if self.zero_fallback != "uniform":
            raise ValueError(f"unsupported zero_fallback {self.zero_fallback!r}")


def selection_weights(similarities: Sequence[float], temperature: float = 1.0) -> np.ndarray:
    s = np.asarray(similarities, dtype=float)
    if s.size == 0:
        raise DataError("cannot select from an empty hit list")
    if (s < 0).any() or (s > 1).any():
        raise DataError("similarities must lie in [0, 1]")
    w = s ** (1.0 / temperature)
    total = w.sum()
    if total == 0:
        return np.full(s.size, 1.0 / s.size)
    return w / total


def draw_uniform(seed: int, counter: int) -> float:
    """One uniform draw that depends only on ``(seed, counter)``."""
    raw = np.random.Philox(key=seed & (2**64 - 1), counter=counter & (2**256 - 1)).random_raw()
    return (int(raw) >> 11) * 2.0**-53


def select_exemplar(hits: Sequence[Hit], policy: SelectionPolicy = SelectionPolicy(), counter: int = 0) -> Hit:
    """Pick one hit; identical ``(hits, policy.seed, counter)`` give identical picks.

    Callers pass the target's input ordinal as ``counter`` so resumed or
    parallel runs reselect the same exemplar.
    """
    p = selection_weights([h.similarity for h in hits], policy.temperature)
    u = draw_uniform(policy.seed, counter)
    cdf = np.cumsum(p)
    i = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
    return hits[min(i, len(hits) - 1)]
