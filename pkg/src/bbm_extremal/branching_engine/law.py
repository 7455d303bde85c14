from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np


class InvalidLawError(ValueError):
    pass


@dataclass(frozen=True)
class BranchingLaw:
    """Offspring distribution ``{k: p_k}`` with ``k >= 1``.

    The model is normalized to mean offspring 2, so that ``E n(t) = e^t`` with
    unit branching rate.  Use :meth:`degenerate` for the no-branching law
    ``p_1 = 1``, which is the only accepted exception to the mean constraint.
    """

    offspring_probs: Mapping[int, float] = field(default_factory=lambda: {2: 1.0})
    allow_degenerate: bool = False

    def __post_init__(self):
        probs = {int(k): float(p) for k, p in self.offspring_probs.items() if p != 0.0}
        if not probs:
            raise InvalidLawError("empty offspring law")
        if any(k < 1 for k in probs):
            raise InvalidLawError("offspring counts must be >= 1")
        if any(p < 0 for p in probs.values()):
            raise InvalidLawError("negative probability")
        total = sum(probs.values())
        if abs(total - 1.0) > 1e-12:
            raise InvalidLawError(f"probabilities sum to {total!r}, not 1")
        mean = sum(k * p for k, p in probs.items())
        if abs(mean - 2.0) > 1e-12 and not (self.allow_degenerate and probs == {1: 1.0}):
            raise InvalidLawError(f"mean offspring is {mean!r}; the model requires 2")
        object.__setattr__(self, "offspring_probs", dict(sorted(probs.items())))

    @classmethod
    def binary(cls) -> "BranchingLaw":
        return cls({2: 1.0})

    @classmethod
    def degenerate(cls) -> "BranchingLaw":
        """``p_1 = 1``: a single Brownian particle, renewed at unit rate."""
        return cls({1: 1.0}, allow_degenerate=True)

    @property
    def K(self) -> float:
        return sum(k * (k - 1) * p for k, p in self.offspring_probs.items())

    @property
    def is_binary(self) -> bool:
        return self.offspring_probs == {2: 1.0}

    @property
    def max_offspring(self) -> int:
        return max(self.offspring_probs)

    def cumulative(self) -> tuple[np.ndarray, np.ndarray]:
        ks = np.array(list(self.offspring_probs), dtype=np.int64)
        cdf = np.cumsum([self.offspring_probs[k] for k in ks])
        cdf[-1] = 1.0
        return ks, cdf

    def draw(self, u: np.ndarray) -> np.ndarray:
        """Offspring counts from uniforms by inversion."""
        ks, cdf = self.cumulative()
        return ks[np.searchsorted(cdf, u, side="right").clip(max=len(ks) - 1)]

    def generating(self, s):
        """``sum_k p_k s^k``, the nonlinearity of the F-KPP equation."""
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for k, p in self.offspring_probs.items():
            out = out + p * s**k
        return out

    def to_dict(self) -> dict:
        return {str(k): p for k, p in self.offspring_probs.items()}
