"""Scorers plugged into the evaluation harness: item-kNN, MSI (most
surprising item) and LSI (least surprising item)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from normsurprise.distances import DistanceMatrix

ALGORITHMS = ("knn", "msi", "lsi")


@dataclass(frozen=True)
class UserHistory:
    ratings: Mapping[int, float]
    exposed: frozenset = field(init=False)
    _items: np.ndarray = field(init=False, repr=False, compare=False)
    _values: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.ratings:
            raise ValueError("a user history needs at least one rated item")
        items = sorted(self.ratings)
        object.__setattr__(self, "exposed", frozenset(items))
        object.__setattr__(self, "_items", np.array(items, dtype=np.int64))
        object.__setattr__(
            self, "_values", np.array([self.ratings[i] for i in items], dtype=np.float64)
        )

    @property
    def items(self) -> np.ndarray:
        """Rated items, ascending."""
        return self._items

    @property
    def values(self) -> np.ndarray:
        """Ratings aligned with :attr:`items`."""
        return self._values


def _check_candidates(candidates: Sequence[int], hist: UserHistory) -> None:
    overlap = hist.exposed.intersection(candidates)
    if overlap:
        raise ValueError(f"candidates already known to the user: {sorted(overlap)[:5]}")


def knn_scores(
    candidates: Sequence[int], hist: UserHistory, distances: DistanceMatrix, k: int = 50
) -> np.ndarray:
    """Similarity-weighted mean rating of each candidate's ``k`` nearest
    rated items, with similarity ``1 / (1 + d)``. Distance ties go to the
    smaller item id."""
    if k < 1:
        raise ValueError("k must be at least 1")
    _check_candidates(candidates, hist)
    dist = distances.block(candidates, hist.items)
    # stable sort keeps ascending item id among equal distances
    order = np.argsort(dist, axis=1, kind="stable")[:, :k]
    near = np.take_along_axis(dist, order, axis=1)
    sim = 1.0 / (1.0 + near)
    return (sim * hist.values[order]).sum(axis=1) / sim.sum(axis=1)


def surprise_scores(
    candidates: Sequence[int], hist: UserHistory, distances: DistanceMatrix
) -> np.ndarray:
    _check_candidates(candidates, hist)
    return distances.block(candidates, hist.items).min(axis=1)


def knn_score(i: int, hist: UserHistory, distances: DistanceMatrix, k: int = 50) -> float:
    return float(knn_scores([i], hist, distances, k)[0])


def msi_score(i: int, hist: UserHistory, distances: DistanceMatrix) -> float:
    return float(surprise_scores([i], hist, distances)[0])


def lsi_score(i: int, hist: UserHistory, distances: DistanceMatrix) -> float:
    return -msi_score(i, hist, distances)


@dataclass(frozen=True)
class Scorer:
    """A scoring algorithm bound to a distance matrix."""

    kind: str
    distances: DistanceMatrix
    k: int = 50

    def __post_init__(self):
        if self.kind not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.kind!r}; expected one of {ALGORITHMS}")
        if self.k < 1:
            raise ValueError("k must be at least 1")

    def scores(self, candidates: Sequence[int], hist: UserHistory) -> np.ndarray:
        if self.kind == "knn":
            return knn_scores(candidates, hist, self.distances, self.k)
        surprise = surprise_scores(candidates, hist, self.distances)
        return surprise if self.kind == "msi" else -surprise

    def score(self, i: int, hist: UserHistory) -> float:
        return float(self.scores([i], hist)[0])


def rank_top_n(
    candidates: Sequence[int], scorer: Scorer, hist: UserHistory, top_n: int
) -> tuple[int, ...]:
    """Top ``top_n`` candidates by descending score, ties by ascending id."""
    candidates = np.asarray(candidates, dtype=np.int64)
    if np.unique(candidates).size != candidates.size:
        raise ValueError("candidates must be distinct")
    if top_n < 1 or top_n > candidates.size:
        raise ValueError(f"top_n={top_n} must lie in 1..{candidates.size}")
    scores = scorer.scores(candidates, hist)
    order = np.lexsort((candidates, -scores))
    return tuple(int(i) for i in candidates[order[:top_n]])
