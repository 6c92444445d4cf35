"""Item surprise, sequence surprise, greedy potential-surprise bounds and
normalised surprise.

Items are integer ids. A distance ``d`` is either a
:class:`~normsurprise.distances.DistanceMatrix` (vectorised path) or any
callable ``d(i, j) -> float`` over ids.

All recursions are unrolled into loops; ties in argmax/argmin go to the
smallest item id.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Collection, Sequence, Union

import numpy as np

from normsurprise.distances import DistanceMatrix
from normsurprise.errors import InvalidSequenceError

EPS = 1e-12

Distance = Union[DistanceMatrix, Callable[[int, int], float]]


@dataclass(frozen=True)
class SurpriseBounds:
    """Maximum and minimum potential surprise for sequences of length ``k``."""

    max_value: float
    min_value: float
    max_seq: tuple[int, ...]
    min_seq: tuple[int, ...]
    exact: bool = False

    @property
    def k(self) -> int:
        return len(self.max_seq)

    @property
    def span(self) -> float:
        return self.max_value - self.min_value


def pairwise(d: Distance, rows: Sequence[int], cols: Sequence[int]) -> np.ndarray:
    """``len(rows) x len(cols)`` array of distances."""
    if isinstance(d, DistanceMatrix):
        return d.block(rows, cols)
    out = np.empty((len(rows), len(cols)), dtype=np.float64)
    for a, r in enumerate(rows):
        for b, c in enumerate(cols):
            out[a, b] = d(r, c)
    return out


def _require_exposed(exposed: Collection[int]) -> list[int]:
    exposed = sorted(set(exposed))
    if not exposed:
        raise ValueError("surprise is undefined against an empty exposed set")
    return exposed


def item_surprise(i: int, exposed: Collection[int], d: Distance) -> float:
    """Distance from ``i`` to the closest item in ``exposed``."""
    exposed = _require_exposed(exposed)
    if i in exposed:
        return 0.0
    return float(pairwise(d, [i], exposed).min())


def step_surprises(seq: Sequence[int], exposed: Collection[int], d: Distance) -> np.ndarray:
    """Surprise of each item of ``seq`` at the moment it is consumed."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        raise InvalidSequenceError("recommendation sequence repeats an item")
    if not seq:
        return np.zeros(0)
    exposed = _require_exposed(exposed)
    steps = pairwise(d, seq, exposed).min(axis=1)
    inner = pairwise(d, seq, seq)
    for p in range(1, len(seq)):
        steps[p] = min(steps[p], inner[p, :p].min())
    return steps


def sequence_surprise(seq: Sequence[int], exposed: Collection[int], d: Distance) -> float:
    """Total surprise of consuming ``seq`` in order, each item joining the
    exposed set once consumed. The empty sequence scores 0."""
    total = 0.0
    for value in step_surprises(seq, exposed, d):
        total += float(value)
    return total


def _greedy(
    candidates: np.ndarray, exposed: list[int], d: Distance, k: int, maximise: bool
) -> tuple[float, tuple[int, ...]]:
    if isinstance(d, DistanceMatrix):
        cpos = d.positions(candidates)
        current = d.values[np.ix_(cpos, d.positions(exposed))].min(axis=1)

        def column(pos: int) -> np.ndarray:
            return d.values[cpos, cpos[pos]]
    else:
        current = pairwise(d, candidates, exposed).min(axis=1)

        def column(pos: int) -> np.ndarray:
            return pairwise(d, candidates, [int(candidates[pos])])[:, 0]

    available = np.ones(candidates.size, dtype=bool)
    blocked = -np.inf if maximise else np.inf
    pick_fn = np.argmax if maximise else np.argmin
    total = 0.0
    picks = []
    for _ in range(k):
        # candidates are sorted, so the first extremum is the smallest id
        pos = int(pick_fn(np.where(available, current, blocked)))
        total += float(current[pos])
        item = int(candidates[pos])
        picks.append(item)
        available[pos] = False
        current = np.minimum(current, column(pos))
    return total, tuple(picks)


def greedy_bounds(
    unknown: Collection[int], exposed: Collection[int], d: Distance, k: int
) -> SurpriseBounds:
    """Greedy estimates of the max/min surprise of a length-``k`` sequence
    drawn from ``unknown``.

    Each step takes the currently most (least) surprising remaining item
    and adds it to the exposed set. ``max_value``/``min_value`` equal the
    sequence surprise of the returned sequences bit for bit.
    """
    candidates = np.array(sorted(set(unknown)), dtype=np.int64)
    exposed = _require_exposed(exposed)
    if k < 1:
        raise ValueError("sequence length k must be at least 1")
    if k > candidates.size:
        raise ValueError(f"k={k} exceeds the {candidates.size} unknown items")
    if set(exposed) & set(candidates.tolist()):
        raise ValueError("unknown and exposed sets must be disjoint")
    max_value, max_seq = _greedy(candidates, exposed, d, k, maximise=True)
    min_value, min_seq = _greedy(candidates, exposed, d, k, maximise=False)
    return SurpriseBounds(max_value, min_value, max_seq, min_seq, exact=False)


def scale(value: float, bounds: SurpriseBounds) -> float:
    """Position of ``value`` between the bounds, clipped to [0, 1].

    A degenerate span means every sequence attains the maximum: 1.0.
    """
    span = bounds.max_value - bounds.min_value
    if span < EPS:
        return 1.0
    return float(min(max((value - bounds.min_value) / span, 0.0), 1.0))


def normalized_surprise(
    seq: Sequence[int],
    unknown: Collection[int],
    exposed: Collection[int],
    d: Distance,
    bounds: SurpriseBounds | None = None,
) -> float:
    """Normalised surprise of ``seq`` against greedy bounds over the full
    ``unknown`` set with ``k = len(seq)``.

    Pass ``bounds`` to reuse a previous :func:`greedy_bounds` result.
    """
    seq = list(seq)
    if not seq:
        raise ValueError("normalised surprise needs a non-empty sequence")
    exposed_set = set(exposed)
    if exposed_set.intersection(seq):
        raise InvalidSequenceError("sequence contains an item the user was already exposed to")
    unknown_set = set(unknown)
    if not unknown_set.issuperset(seq):
        raise ValueError("sequence items must be drawn from the unknown set")
    if bounds is None:
        bounds = greedy_bounds(unknown_set, exposed_set, d, len(seq))
    elif bounds.k != len(seq):
        raise ValueError("bounds were computed for a different sequence length")
    return scale(sequence_surprise(seq, exposed_set, d), bounds)
