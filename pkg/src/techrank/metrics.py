"""Rankings from weights, and Spearman's rho between rankings."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import InsufficientOverlap, ZeroVariance


@dataclass(frozen=True)
class RankEntry:
    label: str
    weight: float | None
    rank: float


@dataclass(frozen=True)
class Ranking:
    """Entities ordered best first; tied entities share their average rank."""

    entries: tuple[RankEntry, ...]
    tie_policy: str = "average"

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def ranks(self) -> dict[str, float]:
        return {e.label: e.rank for e in self.entries}

    def labels(self) -> list[str]:
        return [e.label for e in self.entries]

    def top(self) -> list[str]:
        """Labels sharing the best rank."""
        if not self.entries:
            return []
        best = self.entries[0].rank
        return [e.label for e in self.entries if e.rank == best]


def _tied(a: float, b: float, rtol: float) -> bool:
    return a == b or abs(a - b) <= rtol * max(abs(a), abs(b))


def average_ranks(keys: list[float], rtol: float = 0.0) -> list[float]:
    """1-based ranks by ascending ``keys``; equal keys get their mean position.

    With ``rtol > 0``, neighbours in sorted order closer than ``rtol``
    (relative) are chained into one tie group.
    """
    order = sorted(range(len(keys)), key=lambda i: keys[i])
    ranks = [0.0] * len(keys)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and _tied(keys[order[j]], keys[order[j + 1]], rtol):
            j += 1
        # positions i..j (0-based) share the rank ((i+1) + (j+1)) / 2
        shared = (i + j + 2) / 2
        for k in range(i, j + 1):
            ranks[order[k]] = shared
        i = j + 1
    return ranks


def weights_to_ranking(
    weights: Mapping[str, float] | Iterable[tuple[str, float]], rtol: float = 0.0
) -> Ranking:
    """Rank entities by descending weight.

    Ties share their average position and are listed by label, so the
    result does not depend on input order. ``rtol`` widens ties to weights
    within that relative distance, e.g. to absorb floating point round-off.
    """
    items = list(weights.items() if isinstance(weights, Mapping) else weights)
    labels = [str(label) for label, _ in items]
    if len(set(labels)) != len(labels):
        raise ValueError("duplicate labels in weights")
    values = [float(w) for _, w in items]
    if not all(math.isfinite(w) for w in values):
        raise ValueError("weights must be finite")

    ranks = average_ranks([-w for w in values], rtol)
    order = sorted(range(len(items)), key=lambda i: (ranks[i], labels[i]))
    return Ranking(tuple(RankEntry(labels[i], values[i], ranks[i]) for i in order))


def ranks_to_ranking(ranks: Mapping[str, float] | Iterable[tuple[str, float]]) -> Ranking:
    """Wrap externally assigned ranks (lower is better, gaps allowed)."""
    items = list(ranks.items() if isinstance(ranks, Mapping) else ranks)
    order = sorted(range(len(items)), key=lambda i: (float(items[i][1]), items[i][0]))
    return Ranking(tuple(RankEntry(items[i][0], None, float(items[i][1])) for i in order))


@dataclass(frozen=True)
class Correlation:
    rho: float
    n_common: int
    only_a: int = 0
    only_b: int = 0


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise ZeroVariance("a ranking has all entities tied")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def spearman(a: Ranking, b: Ranking) -> Correlation:
    """Spearman's rho over the entities present in both rankings.

    Both sides are re-ranked on the common entities (average ranks for
    ties) and rho is the Pearson correlation of those rank vectors, which
    stays exact when ties are present.

    Raises
    ------
    InsufficientOverlap
        Fewer than two common entities.
    ZeroVariance
        Every common entity is tied on one side.
    """
    ra, rb = a.ranks(), b.ranks()
    common = sorted(set(ra) & set(rb))
    if len(common) < 2:
        raise InsufficientOverlap(f"only {len(common)} entities in common")
    x = average_ranks([ra[k] for k in common])
    y = average_ranks([rb[k] for k in common])
    return Correlation(pearson(x, y), len(common), len(ra) - len(common), len(rb) - len(common))


def spearman_shortcut(x: list[float], y: list[float]) -> float:
    """``1 - 6 sum d^2 / (n (n^2 - 1))``; exact only for tie-free ranks."""
    n = len(x)
    d2 = sum((p - q) ** 2 for p, q in zip(x, y))
    return 1.0 - 6.0 * d2 / (n * (n * n - 1))
