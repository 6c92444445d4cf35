"""Exact potential surprise by enumeration, and a report comparing it with
the greedy estimates on random 2-D instances.

Enumeration is vectorised over batches of permutations but visits every
one of them; there is no pruning.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Collection, Iterable, Sequence

import numpy as np

from normsurprise.core import Distance, SurpriseBounds, _require_exposed, greedy_bounds, pairwise
from normsurprise.distances import DistanceFn, build_distance_matrix

MAX_PERMUTED = 10
MAX_ARRANGEMENTS = 5_000_000
BATCH = 100_000
GAP_TOL = 1e-9

ORACLE_KINDS = ("euclidean", "cosine", "jaccard", "jensen_shannon")
# keeps Jaccard/Jensen-Shannon inputs away from all-zero vectors
SHIFT = 0.01


def _arrangement_batches(n: int, k: int) -> Iterable[np.ndarray]:
    it = itertools.permutations(range(n), k)
    while True:
        chunk = list(itertools.islice(it, BATCH))
        if not chunk:
            return
        yield np.array(chunk, dtype=np.int64)


def _enumerate(
    unknown: Collection[int], exposed: Collection[int], d: Distance, k: int
) -> SurpriseBounds:
    ids = sorted(set(unknown))
    exposed = _require_exposed(exposed)
    if set(ids) & set(exposed):
        raise ValueError("unknown and exposed sets must be disjoint")
    base = pairwise(d, ids, exposed).min(axis=1)
    inner = pairwise(d, ids, ids)

    best_max, best_min = -math.inf, math.inf
    arg_max = arg_min = None
    for batch in _arrangement_batches(len(ids), k):
        total = np.zeros(len(batch))
        for p in range(k):
            step = base[batch[:, p]]
            for q in range(p):
                step = np.minimum(step, inner[batch[:, p], batch[:, q]])
            # same left-to-right accumulation as sequence_surprise
            total = total + step
        hi = int(np.argmax(total))
        lo = int(np.argmin(total))
        # strict comparisons keep the lexicographically first witness
        if total[hi] > best_max:
            best_max, arg_max = float(total[hi]), batch[hi]
        if total[lo] < best_min:
            best_min, arg_min = float(total[lo]), batch[lo]
    return SurpriseBounds(
        best_max,
        best_min,
        tuple(ids[j] for j in arg_max),
        tuple(ids[j] for j in arg_min),
        exact=True,
    )


def exact_bounds(unknown: Collection[int], exposed: Collection[int], d: Distance) -> SurpriseBounds:
    """True max/min sequence surprise over all orderings of ``unknown``."""
    n = len(set(unknown))
    if n < 1:
        raise ValueError("unknown set is empty")
    if n > MAX_PERMUTED:
        raise ValueError(
            f"{n} unknown items exceed the enumeration cap of {MAX_PERMUTED}; "
            "use greedy_bounds instead"
        )
    return _enumerate(unknown, exposed, d, n)


def exact_truncated_bounds(
    unknown: Collection[int], exposed: Collection[int], d: Distance, k: int
) -> SurpriseBounds:
    """True max/min sequence surprise over all ``k``-arrangements of ``unknown``."""
    n = len(set(unknown))
    if not 1 <= k <= n:
        raise ValueError(f"k={k} must lie in 1..{n}")
    count = math.perm(n, k)
    if count > MAX_ARRANGEMENTS:
        raise ValueError(
            f"{count} arrangements exceed the enumeration budget of {MAX_ARRANGEMENTS}"
        )
    return _enumerate(unknown, exposed, d, k)


@dataclass(frozen=True)
class OracleRow:
    distance: str
    instance: int
    n_unknown: int
    exact_max: float
    greedy_max: float
    exact_min: float
    greedy_min: float

    @property
    def max_gap(self) -> float:
        return self.exact_max - self.greedy_max

    @property
    def min_gap(self) -> float:
        return self.greedy_min - self.exact_min


@dataclass
class OracleReport:
    rows: list[OracleRow] = field(default_factory=list)

    def distances(self) -> list[str]:
        return list(dict.fromkeys(r.distance for r in self.rows))

    def for_distance(self, kind: str) -> list[OracleRow]:
        return [r for r in self.rows if r.distance == kind]

    def violations(self, tol: float = GAP_TOL) -> list[OracleRow]:
        return [r for r in self.rows if r.max_gap < -tol or r.min_gap < -tol]

    def summary(self, tol: float = GAP_TOL) -> list[dict]:
        out = []
        for kind in self.distances():
            rows = self.for_distance(kind)
            n = len(rows)
            out.append({
                "distance": kind,
                "instances": n,
                "exact_max": sum(r.exact_max for r in rows) / n,
                "greedy_max": sum(r.greedy_max for r in rows) / n,
                "exact_min": sum(r.exact_min for r in rows) / n,
                "greedy_min": sum(r.greedy_min for r in rows) / n,
                "max_zero_gap_rate": sum(abs(r.max_gap) <= tol for r in rows) / n,
                "min_zero_gap_rate": sum(abs(r.min_gap) <= tol for r in rows) / n,
                "largest_max_gap": max(r.max_gap for r in rows),
                "largest_min_gap": max(r.min_gap for r in rows),
                "violations": sum(r.max_gap < -tol or r.min_gap < -tol for r in rows),
            })
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["Distance", "instance", "n_unknown", "S_pmax", "S_pmax_greedy",
                         "S_pmin", "S_pmin_greedy", "max_gap", "min_gap"])
        for r in self.rows:
            writer.writerow([r.distance, r.instance, r.n_unknown, repr(r.exact_max),
                             repr(r.greedy_max), repr(r.exact_min), repr(r.greedy_min),
                             repr(r.max_gap), repr(r.min_gap)])
        return buf.getvalue()

    def render(self) -> str:
        head = (f"{'Distance':<16}{'S_pmax':>10}{'~S_pmax':>10}{'S_pmin':>10}{'~S_pmin':>10}"
                f"{'max=':>8}{'min=':>8}{'viol':>6}")
        lines = [head, "-" * len(head)]
        for s in self.summary():
            lines.append(
                f"{s['distance']:<16}{s['exact_max']:>10.3f}{s['greedy_max']:>10.3f}"
                f"{s['exact_min']:>10.3f}{s['greedy_min']:>10.3f}"
                f"{s['max_zero_gap_rate']:>8.0%}{s['min_zero_gap_rate']:>8.0%}{s['violations']:>6d}"
            )
        lines.append("means over instances; max=/min= share of instances where greedy is exact")
        return "\n".join(lines)


def random_instance(rng: np.random.Generator, size_range: tuple[int, int]) -> np.ndarray:
    """Points in the unit square; row 0 is the single exposed item."""
    n = int(rng.integers(size_range[0], size_range[1] + 1))
    return rng.random((n + 1, 2))


def validate_greedy(
    instance_count: int = 200,
    size_range: tuple[int, int] = (5, 8),
    distance_kinds: Sequence[str] = ORACLE_KINDS,
    seed: int = 0,
) -> OracleReport:
    """Exact vs greedy potential surprise on seeded random 2-D instances."""
    lo, hi = size_range
    if instance_count < 1:
        raise ValueError("instance_count must be positive")
    if not 1 <= lo <= hi <= MAX_PERMUTED:
        raise ValueError(f"size range must lie within 1..{MAX_PERMUTED}")
    kinds = [DistanceFn(k).kind for k in distance_kinds]
    for kind in kinds:
        if kind not in ORACLE_KINDS:
            raise ValueError(f"oracle instances support {', '.join(ORACLE_KINDS)} only")
    rng = np.random.default_rng(seed)
    report = OracleReport()
    for inst in range(instance_count):
        points = random_instance(rng, size_range)
        ids = list(range(len(points)))
        for kind in kinds:
            pts = points + SHIFT if kind in ("jaccard", "jensen_shannon") else points
            dm = build_distance_matrix(ids, DistanceFn(kind), dict(zip(ids, pts)))
            unknown, exposed = ids[1:], [0]
            exact = exact_bounds(unknown, exposed, dm)
            greedy = greedy_bounds(unknown, exposed, dm, len(unknown))
            report.rows.append(OracleRow(kind, inst, len(unknown), exact.max_value,
                                         greedy.max_value, exact.min_value, greedy.min_value))
    return report
