"""Integer-valued sample summaries shared by the wave fits and the experiments."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class EmpiricalLattice:
    name: str
    offset: int
    counts: np.ndarray
    replicates: int
    centring: float = 0.0
    seed: dict = field(default_factory=dict)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if int(self.counts.sum()) != self.replicates:
            raise ValueError("counts must sum to the number of replicates")
        if self.replicates <= 0:
            raise ValueError("empty lattice")

    @classmethod
    def from_samples(cls, name: str, samples, centring: float = 0.0, seed: dict | None = None) -> "EmpiricalLattice":
        x = np.asarray(samples, dtype=np.int64)
        lo = int(x.min())
        counts = np.bincount(x - lo)
        return cls(name, lo, counts, len(x), float(centring), dict(seed or {}))

    @classmethod
    def from_probabilities(cls, name: str, offset: int, probs, replicates: int = 10**12,
                           centring: float = 0.0) -> "EmpiricalLattice":
        """Pseudo-sample with counts proportional to exact probabilities (for self-fit tests)."""
        p = np.asarray(probs, dtype=float)
        counts = np.floor(p * replicates).astype(np.int64)
        counts[np.argmax(counts)] += replicates - counts.sum()
        return cls(name, offset, counts, replicates, centring)

    @property
    def support(self) -> np.ndarray:
        return self.offset + np.arange(len(self.counts))

    def pmf(self) -> np.ndarray:
        return self.counts / self.replicates

    def cdf(self) -> np.ndarray:
        """``P(X <= k)`` on the support."""
        return np.cumsum(self.counts) / self.replicates

    def survival(self) -> np.ndarray:
        """``P(X >= k)`` on the support."""
        return np.cumsum(self.counts[::-1])[::-1] / self.replicates

    def cdf_at(self, ks) -> np.ndarray:
        ks = np.asarray(ks, dtype=np.int64)
        c = np.concatenate([[0.0], self.cdf()])
        idx = np.clip(ks - self.offset + 1, 0, len(self.counts))
        return c[idx]

    def survival_at(self, ks) -> np.ndarray:
        return 1.0 - self.cdf_at(np.asarray(ks) - 1)

    def mean(self) -> float:
        return float(np.dot(self.support, self.counts) / self.replicates)

    def quantile(self, q: float) -> int:
        return int(self.support[np.searchsorted(self.cdf(), q - 1e-15)])

    def merge(self, other: "EmpiricalLattice") -> "EmpiricalLattice":
        lo = min(self.offset, other.offset)
        hi = max(self.offset + len(self.counts), other.offset + len(other.counts))
        counts = np.zeros(hi - lo, dtype=np.int64)
        counts[self.offset - lo: self.offset - lo + len(self.counts)] += self.counts
        counts[other.offset - lo: other.offset - lo + len(other.counts)] += other.counts
        return EmpiricalLattice(self.name, lo, counts, self.replicates + other.replicates, self.centring, self.seed)
