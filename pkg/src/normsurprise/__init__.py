"""Normalised surprise for recommender systems.

Bounds on how much surprise a recommender can embed in a list of
recommendations, a [0, 1] metric built on those bounds, and an offline
one-plus-random harness that measures it over chronologically segmented
rating logs.
"""

from normsurprise.core import (
    SurpriseBounds,
    greedy_bounds,
    item_surprise,
    normalized_surprise,
    sequence_surprise,
)
from normsurprise.distances import DistanceFn, DistanceMatrix, build_distance_matrix
from normsurprise.errors import DataError, InvalidSequenceError, UsageError

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "DistanceFn",
    "DistanceMatrix",
    "InvalidSequenceError",
    "SurpriseBounds",
    "UsageError",
    "build_distance_matrix",
    "greedy_bounds",
    "item_surprise",
    "normalized_surprise",
    "sequence_surprise",
]
