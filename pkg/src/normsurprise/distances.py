"""Item distance functions and dense distance matrices.

Six distances are supported: ``euclidean``, ``cosine``, ``jaccard``
(weighted min/max form), ``jensen_shannon`` (base-2 divergence),
``aitchison`` (with multiplicative zero replacement) and ``npmi`` (over a
co-exposure probability model rather than vectors).

Matrices are dense float64, indexed by sorted item id, and can be cached
in a small binary format (``SBDM``) or exported as CSV.
"""

from __future__ import annotations

import csv
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

KINDS = ("euclidean", "cosine", "jaccard", "jensen_shannon", "aitchison", "npmi")
VECTOR_KINDS = KINDS[:-1]

SBDM_MAGIC = b"SBDM"
SBDM_VERSION = 1

PERKS_STRENGTH = 1.0


def canonical_kind(name: str) -> str:
    """Map user-facing spellings (``jensen-shannon``, ``Euclidean``) to a kind."""
    kind = name.strip().lower().replace("-", "_")
    if kind not in KINDS:
        raise ValueError(f"unknown distance {name!r}; expected one of {', '.join(KINDS)}")
    return kind


def _pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1:
        raise ValueError("distance inputs must be 1-D vectors")
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape[0]} != {y.shape[0]}")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValueError("vectors must have finite components")
    return x, y


def _check_nonnegative(*vectors: np.ndarray) -> None:
    for v in vectors:
        if (v < 0).any():
            raise ValueError("negative component; this distance requires non-negative vectors")


def euclidean(x, y) -> float:
    x, y = _pair(x, y)
    diff = x - y
    return float(np.sqrt(np.dot(diff, diff)))


def cosine_distance(x, y) -> float:
    x, y = _pair(x, y)
    nx = np.sqrt(np.dot(x, x))
    ny = np.sqrt(np.dot(y, y))
    if nx == 0 or ny == 0:
        raise ValueError("cosine distance is undefined for a zero vector")
    if np.array_equal(x, y):
        return 0.0
    value = 1.0 - np.dot(x, y) / (nx * ny)
    return float(min(max(value, 0.0), 2.0))


def weighted_jaccard(x, y) -> float:
    """``1 - sum(min(x, y)) / sum(max(x, y))``; reduces to set Jaccard on 0/1 data."""
    x, y = _pair(x, y)
    _check_nonnegative(x, y)
    upper = np.maximum(x, y).sum()
    if upper == 0:
        raise ValueError("weighted Jaccard is undefined for two all-zero vectors")
    return float(1.0 - np.minimum(x, y).sum() / upper)


def _closure(v: np.ndarray) -> np.ndarray:
    total = v.sum()
    if total <= 0:
        raise ValueError("vector must have a positive sum")
    return v / total


def _kl_to_mixture(p: np.ndarray, m: np.ndarray) -> float:
    support = p > 0
    # m >= p / 2 > 0 wherever p > 0
    return float(np.sum(p[support] * np.log2(p[support] / m[support])))


def jensen_shannon(x, y) -> float:
    """Base-2 Jensen-Shannon divergence of the closed vectors, in [0, 1].

    Zero components need no smoothing: the mixture is positive wherever
    either input is, and ``0 log 0`` is taken as 0.
    """
    x, y = _pair(x, y)
    _check_nonnegative(x, y)
    p = _closure(x)
    q = _closure(y)
    m = (p + q) / 2.0
    value = 0.5 * _kl_to_mixture(p, m) + 0.5 * _kl_to_mixture(q, m)
    return float(min(max(value, 0.0), 1.0))


def bmt_smooth(counts, n: float | None = None) -> np.ndarray:
    """Bayesian multiplicative zero replacement with a Perks prior.

    Each zero part becomes ``t * s / (n + s)`` with ``s = 1`` and
    ``t = 1 / D``; non-zero parts of the closed composition are shrunk by
    ``1 - (sum of replacements)`` so ratios among them are preserved.

    Parameters
    ----------
    counts : array_like
        Non-negative vector with at least one positive part.
    n : float, optional
        Total count; defaults to ``counts.sum()``.

    Returns
    -------
    np.ndarray
        Strictly positive composition summing to 1.
    """
    x = np.asarray(counts, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("counts must be a non-empty 1-D vector")
    if (x < 0).any() or not np.isfinite(x).all():
        raise ValueError("counts must be finite and non-negative")
    total = x.sum()
    if total <= 0:
        raise ValueError("cannot smooth an all-zero vector")
    if n is None:
        n = total
    if n <= 0:
        raise ValueError("total count n must be positive")
    comp = x / total
    zeros = x == 0
    n_zeros = int(zeros.sum())
    if n_zeros:
        replacement = (1.0 / x.size) * PERKS_STRENGTH / (n + PERKS_STRENGTH)
        comp[~zeros] *= 1.0 - n_zeros * replacement
        comp[zeros] = replacement
    return comp


def clr(x) -> np.ndarray:
    """Centred log-ratio transform of a strictly positive vector."""
    logs = np.log(np.asarray(x, dtype=np.float64))
    return logs - logs.mean()


def aitchison(x, y) -> float:
    x, y = _pair(x, y)
    if (x <= 0).any() or (y <= 0).any():
        raise ValueError(
            "Aitchison distance needs strictly positive parts; apply bmt_smooth first"
        )
    diff = clr(x) - clr(y)
    return float(np.sqrt(np.dot(diff, diff)))


def _smooth_if_needed(v: np.ndarray) -> np.ndarray:
    return bmt_smooth(v) if (v == 0).any() else v


def npmi_distance(i: int, j: int, model) -> float:
    """NPMI similarity mapped from [-1, 1] onto a distance in [0, 1].

    ``p(i, j) = 0`` counts as NPMI -1 (distance 1); ``i == j`` or
    ``p(i, j) = 1`` counts as NPMI 1 (distance 0).
    """
    p_i = model.p_single(i)
    p_j = model.p_single(j)
    if p_i <= 0 or p_j <= 0:
        raise ValueError("item probabilities must be positive")
    if i == j:
        return 0.0
    return _npmi_to_distance(model.p_joint(i, j), p_i, p_j)


def _npmi_to_distance(p_ij: float, p_i: float, p_j: float) -> float:
    if p_ij <= 0:
        return 1.0
    if p_ij >= 1:
        return 0.0
    npmi = np.log(p_ij / (p_i * p_j)) / -np.log(p_ij)
    return float(min(max((1.0 - npmi) / 2.0, 0.0), 1.0))


_SCALAR = {
    "euclidean": euclidean,
    "cosine": cosine_distance,
    "jaccard": weighted_jaccard,
    "jensen_shannon": jensen_shannon,
}


@dataclass(frozen=True)
class DistanceFn:
    """A distance kind plus the NPMI model it needs (``npmi`` only).

    Calling it on two vectors evaluates the distance; Aitchison smooths
    vectors containing zeros first. For ``npmi`` the arguments are item ids.
    """

    kind: str
    context: Any = None

    def __post_init__(self):
        object.__setattr__(self, "kind", canonical_kind(self.kind))
        if self.kind == "npmi" and self.context is None:
            raise ValueError("the npmi distance requires an NPMI model as context")

    def __call__(self, a, b) -> float:
        if self.kind == "npmi":
            return npmi_distance(a, b, self.context)
        if self.kind == "aitchison":
            x, y = _pair(a, b)
            _check_nonnegative(x, y)
            return aitchison(_smooth_if_needed(x), _smooth_if_needed(y))
        return _SCALAR[self.kind](a, b)


class DistanceMatrix:
    """Symmetric item-by-item distances with a zero diagonal.

    Rows and columns follow ascending item id. Instances are callable as
    ``dm(i, j)`` and expose :meth:`block` for vectorised lookups.
    """

    def __init__(self, ids: Sequence[int], values: np.ndarray):
        ids = np.asarray(ids, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        n = ids.size
        if values.shape != (n, n):
            raise ValueError(f"expected a {n}x{n} matrix, got {values.shape}")
        if n > 1 and not (np.diff(ids) > 0).all():
            raise ValueError("item ids must be unique and sorted ascending")
        self.ids = ids
        self.values = values
        self.values.setflags(write=False)
        self._pos = {int(item): k for k, item in enumerate(ids)}
        # dense id -> position table when ids are compact enough
        self._table = None
        if n and ids[0] >= 0 and ids[-1] < 16 * n + 4096:
            self._table = np.full(int(ids[-1]) + 1, -1, dtype=np.int64)
            self._table[ids] = np.arange(n)

    def __len__(self) -> int:
        return self.ids.size

    def __contains__(self, item) -> bool:
        return int(item) in self._pos

    def __call__(self, i: int, j: int) -> float:
        return float(self.values[self._pos[int(i)], self._pos[int(j)]])

    def __eq__(self, other) -> bool:
        if not isinstance(other, DistanceMatrix):
            return NotImplemented
        return np.array_equal(self.ids, other.ids) and np.array_equal(self.values, other.values)

    def __repr__(self) -> str:
        return f"DistanceMatrix(n_items={len(self)})"

    @property
    def items(self) -> list[int]:
        return [int(i) for i in self.ids]

    def positions(self, items: Iterable[int]) -> np.ndarray:
        if self._table is not None:
            arr = np.asarray(items if isinstance(items, np.ndarray) else list(items), dtype=np.int64)
            if arr.size == 0:
                return arr
            inside = (arr >= 0) & (arr < self._table.size)
            pos = np.where(inside, self._table[np.where(inside, arr, 0)], -1)
            if (pos < 0).any():
                raise KeyError(f"item {int(arr[pos < 0][0])} is not in the distance matrix")
            return pos
        try:
            return np.fromiter((self._pos[int(i)] for i in items), dtype=np.int64)
        except KeyError as exc:
            raise KeyError(f"item {exc.args[0]} is not in the distance matrix") from None

    def block(self, rows: Iterable[int], cols: Iterable[int]) -> np.ndarray:
        r = self.positions(rows)
        c = self.positions(cols)
        return self.values[np.ix_(r, c)]

    def save(self, path) -> None:
        """Write the SBDM cache: header, u32 ids, strict upper triangle as LE f64."""
        n = len(self)
        if n and (self.ids.min() < 0 or self.ids.max() > 0xFFFFFFFF):
            raise ValueError("SBDM stores item ids as u32")
        upper = self.values[np.triu_indices(n, k=1)]
        with open(path, "wb") as fh:
            fh.write(SBDM_MAGIC)
            fh.write(struct.pack("<II", SBDM_VERSION, n))
            fh.write(self.ids.astype("<u4").tobytes())
            fh.write(upper.astype("<f8").tobytes())

    @classmethod
    def load(cls, path) -> "DistanceMatrix":
        data = Path(path).read_bytes()
        if data[:4] != SBDM_MAGIC:
            raise ValueError(f"{path}: not an SBDM file")
        version, n = struct.unpack_from("<II", data, 4)
        if version != SBDM_VERSION:
            raise ValueError(f"{path}: unsupported SBDM version {version}")
        offset = 12
        n_upper = n * (n - 1) // 2
        expected = offset + 4 * n + 8 * n_upper
        if len(data) != expected:
            raise ValueError(f"{path}: truncated or oversized SBDM payload")
        ids = np.frombuffer(data, dtype="<u4", count=n, offset=offset).astype(np.int64)
        upper = np.frombuffer(data, dtype="<f8", count=n_upper, offset=offset + 4 * n)
        values = np.zeros((n, n), dtype=np.float64)
        iu = np.triu_indices(n, k=1)
        values[iu] = upper
        values[(iu[1], iu[0])] = upper
        return cls(ids, values)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["item"] + self.items)
            for item, row in zip(self.items, self.values):
                writer.writerow([item] + [repr(float(v)) for v in row])


def _prepare_rows(kind: str, X: np.ndarray) -> np.ndarray:
    if kind == "cosine":
        norms = np.sqrt(np.einsum("ij,ij->i", X, X))
        if (norms == 0).any():
            raise ValueError("cosine distance is undefined for zero vectors")
        return X
    if kind in ("jaccard", "jensen_shannon", "aitchison") and (X < 0).any():
        raise ValueError(f"{kind} requires non-negative vectors")
    if kind == "jensen_shannon":
        sums = X.sum(axis=1)
        if (sums <= 0).any():
            raise ValueError("jensen_shannon requires vectors with a positive sum")
        return X / sums[:, None]
    if kind == "aitchison":
        return np.vstack([clr(_smooth_if_needed(row)) for row in X]) if len(X) else X
    return X


def _row_distances(kind: str, X: np.ndarray, i: int, aux: np.ndarray | None) -> np.ndarray:
    """Distances from row ``i`` to rows ``i+1..n-1``; per-element work never
    depends on how rows are scheduled, so results are thread-count invariant."""
    x = X[i]
    rest = X[i + 1 :]
    if kind in ("euclidean", "aitchison"):
        diff = rest - x
        return np.sqrt(np.einsum("ij,ij->i", diff, diff))
    if kind == "cosine":
        dots = np.einsum("ij,j->i", rest, x)
        out = 1.0 - dots / (aux[i + 1 :] * aux[i])
        same = (rest == x).all(axis=1)
        out[same] = 0.0
        return np.clip(out, 0.0, 2.0)
    if kind == "jaccard":
        lo = np.minimum(rest, x).sum(axis=1)
        hi = np.maximum(rest, x).sum(axis=1)
        if (hi == 0).any():
            raise ValueError("weighted Jaccard is undefined for two all-zero vectors")
        return 1.0 - lo / hi
    if kind == "jensen_shannon":
        m = (rest + x) / 2.0
        with np.errstate(divide="ignore", invalid="ignore"):
            kl_p = np.where(x > 0, x * np.log2(x / m), 0.0).sum(axis=1)
            kl_q = np.where(rest > 0, rest * np.log2(rest / m), 0.0).sum(axis=1)
        return np.clip(0.5 * kl_p + 0.5 * kl_q, 0.0, 1.0)
    raise ValueError(f"no vector implementation for {kind}")


def _npmi_rows(model, ids: np.ndarray) -> np.ndarray:
    p_single = np.array([model.p_single(int(i)) for i in ids], dtype=np.float64)
    if (p_single <= 0).any():
        raise ValueError("item probabilities must be positive")
    joint = model.joint_block(ids)
    with np.errstate(divide="ignore", invalid="ignore"):
        npmi = np.log(joint / np.outer(p_single, p_single)) / -np.log(joint)
    dist = np.clip((1.0 - npmi) / 2.0, 0.0, 1.0)
    dist[joint <= 0] = 1.0
    dist[joint >= 1] = 0.0
    np.fill_diagonal(dist, 0.0)
    # symmetrise on the upper triangle so mirrored entries are bit-identical
    iu = np.triu_indices(len(ids), k=1)
    dist[(iu[1], iu[0])] = dist[iu]
    return dist


def build_distance_matrix(
    items: Iterable[int],
    d: DistanceFn | str,
    representation: Mapping[int, Any] | Any,
    threads: int = 1,
) -> DistanceMatrix:
    """Compute all pairwise distances for ``items``.

    ``representation`` is a mapping item -> vector for the vector kinds and
    an NPMI model for ``npmi``. Only the upper triangle is computed; the
    lower one is its mirror.
    """
    if not isinstance(d, DistanceFn):
        d = DistanceFn(d) if canonical_kind(d) != "npmi" else DistanceFn(d, representation)
    ids = np.array(sorted({int(i) for i in items}), dtype=np.int64)
    n = ids.size

    if d.kind == "npmi":
        model = d.context if d.context is not None else representation
        missing = [int(i) for i in ids if int(i) not in model]
        if missing:
            raise KeyError(f"no NPMI statistics for items: {missing}")
        return DistanceMatrix(ids, _npmi_rows(model, ids))

    missing = [int(i) for i in ids if int(i) not in representation]
    if missing:
        raise KeyError(f"no representation for items: {missing}")
    if n == 0:
        return DistanceMatrix(ids, np.zeros((0, 0)))
    X = np.vstack([np.asarray(representation[int(i)], dtype=np.float64) for i in ids])
    if not np.isfinite(X).all():
        raise ValueError("representation vectors must be finite")
    X = _prepare_rows(d.kind, X)
    aux = np.sqrt(np.einsum("ij,ij->i", X, X)) if d.kind == "cosine" else None

    values = np.zeros((n, n), dtype=np.float64)

    def fill(i: int) -> None:
        row = _row_distances(d.kind, X, i, aux)
        values[i, i + 1 :] = row
        values[i + 1 :, i] = row

    if threads > 1 and n > 2:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, range(n - 1)))
    else:
        for i in range(n - 1):
            fill(i)
    return DistanceMatrix(ids, values)
