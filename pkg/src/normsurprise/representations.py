"""Item representations: count-based text VSM (Model C), precomputed dense
embeddings (Model P), user-item rating vectors (Model U) and an NPMI
co-exposure model (Model N)."""

from __future__ import annotations

import math
import re
from collections import Counter, defaultdict
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Mapping, NamedTuple

import numpy as np
import snowballstemmer

from normsurprise.errors import DataError
from normsurprise.ratings import RatingEvent

MIN_TERMS = 13

_WORD = re.compile(r"[^\W\d_]+")


@dataclass(frozen=True)
class CatalogItem:
    title: str = ""
    description: str | None = None


Catalog = Mapping[int, CatalogItem]


class Rejected(NamedTuple):
    item: int
    reason: str


def load_descriptions(path) -> dict[int, CatalogItem]:
    """Read a ``item_id<TAB>description`` file into a catalog."""
    catalog: dict[int, CatalogItem] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            head, sep, text = line.partition("\t")
            try:
                item = int(head)
            except ValueError:
                raise DataError(f"{path}:{lineno}: bad item id {head!r}") from None
            if item in catalog:
                raise DataError(f"{path}:{lineno}: duplicate item id {item}")
            catalog[item] = CatalogItem(description=text.strip() if sep and text.strip() else None)
    return catalog


def default_stopwords() -> frozenset[str]:
    text = resources.files("normsurprise").joinpath("data/stopwords_en.txt").read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


def load_stopwords(path) -> frozenset[str]:
    with open(path, encoding="utf-8") as fh:
        return frozenset(w.strip().lower() for w in fh if w.strip())


def tokenize(text: str) -> list[str]:
    return _WORD.findall(text.lower())


def build_count_vsm(
    catalog: Catalog, stopwords: Iterable[str] | None = None
) -> tuple[dict[int, np.ndarray], list[Rejected]]:
    """tf-idf vectors from item descriptions.

    lowercase -> letter-run tokens -> stopword removal -> Snowball English
    stems. Items with fewer than 13 remaining tokens are rejected. Weights
    are raw term count times ``ln(N / df)`` over the surviving documents,
    on a vocabulary of sorted stems.
    """
    if not catalog:
        raise ValueError("catalog is empty")
    stop = default_stopwords() if stopwords is None else frozenset(stopwords)
    stemmer = snowballstemmer.stemmer("english")

    rejected: list[Rejected] = []
    docs: dict[int, Counter] = {}
    for item in sorted(catalog):
        desc = catalog[item].description
        if not desc:
            rejected.append(Rejected(item, "missing description"))
            continue
        tokens = [t for t in tokenize(desc) if t not in stop]
        if len(tokens) < MIN_TERMS:
            rejected.append(Rejected(item, f"only {len(tokens)} terms after stopword removal"))
            continue
        docs[item] = Counter(stemmer.stemWords(tokens))
    if not docs:
        raise DataError("no item description survived preprocessing")

    df = Counter(term for counts in docs.values() for term in counts)
    vocab = sorted(df)
    column = {term: k for k, term in enumerate(vocab)}
    n_docs = len(docs)
    idf = np.array([math.log(n_docs / df[t]) for t in vocab])

    vectors: dict[int, np.ndarray] = {}
    for item, counts in docs.items():
        v = np.zeros(len(vocab))
        for term, tf in counts.items():
            v[column[term]] = tf
        v *= idf
        if not (v > 0).any():
            rejected.append(Rejected(item, "every term occurs in all documents (zero tf-idf)"))
            continue
        vectors[item] = v
    rejected.sort()
    return vectors, rejected


def load_dense_vectors(path) -> dict[int, np.ndarray]:
    """Read ``item_id v1 ... vD`` lines (whitespace separated, constant D)."""
    vectors: dict[int, np.ndarray] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            fields = line.split()
            if not fields or fields[0].startswith("#"):
                continue
            try:
                item = int(fields[0])
                values = np.array([float(f) for f in fields[1:]])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: non-numeric field ({exc})") from None
            if values.size == 0:
                raise DataError(f"{path}:{lineno}: item {item} has no components")
            if not np.isfinite(values).all():
                raise DataError(f"{path}:{lineno}: non-finite component")
            if dim is None:
                dim = values.size
            elif values.size != dim:
                raise DataError(f"{path}:{lineno}: expected {dim} components, got {values.size}")
            if item in vectors:
                raise DataError(f"{path}:{lineno}: duplicate item id {item}")
            vectors[item] = values
    if not vectors:
        raise DataError(f"{path}: no vectors")
    return vectors


def save_dense_vectors(path, vectors: Mapping[int, np.ndarray]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for item in sorted(vectors):
            fh.write(" ".join([str(item)] + [repr(float(v)) for v in vectors[item]]) + "\n")


def _latest_ratings(ratings: Iterable[RatingEvent]) -> dict[tuple[int, int], int]:
    latest: dict[tuple[int, int], int] = {}
    for e in sorted(ratings, key=lambda e: (e.timestamp, e.user, e.item)):
        latest[(e.item, e.user)] = e.rating
    return latest


def build_user_item(
    ratings: Iterable[RatingEvent],
    users: Iterable[int] | None = None,
    items: Iterable[int] | None = None,
) -> tuple[dict[int, np.ndarray], list[Rejected]]:
    """One vector per item with a component per user (the user's latest
    rating, else 0). Items listed in ``items`` but never rated are rejected."""
    latest = _latest_ratings(ratings)
    user_ids = sorted(set(users) if users is not None else {u for _, u in latest})
    if not user_ids:
        raise ValueError("user universe is empty")
    col = {u: k for k, u in enumerate(user_ids)}
    rated = sorted({i for i, _ in latest})
    vectors = {i: np.zeros(len(user_ids)) for i in rated}
    for (item, user), rating in latest.items():
        if user not in col:
            raise ValueError(f"user {user} is not in the user universe")
        vectors[item][col[user]] = rating
    universe = set(items) if items is not None else set(rated)
    rejected = [Rejected(i, "no ratings") for i in sorted(universe - set(rated))]
    return {i: v for i, v in vectors.items() if i in universe}, rejected


class NpmiModel:
    """Exposure probabilities: ``p(i)`` is the share of users who rated
    ``i``, ``p(i, j)`` the share who rated both."""

    def __init__(self, ids, counts, co_counts, user_count: int):
        self.ids = np.asarray(ids, dtype=np.int64)
        self.counts = np.asarray(counts, dtype=np.float64)
        self.co_counts = np.asarray(co_counts, dtype=np.float64)
        if user_count <= 0:
            raise ValueError("user_count must be positive")
        self.user_count = int(user_count)
        self._pos = {int(i): k for k, i in enumerate(self.ids)}

    def __contains__(self, item) -> bool:
        return int(item) in self._pos

    def __len__(self) -> int:
        return self.ids.size

    @property
    def items(self) -> list[int]:
        return [int(i) for i in self.ids]

    def _index(self, item) -> int:
        try:
            return self._pos[int(item)]
        except KeyError:
            raise KeyError(f"item {item} is not in the NPMI model") from None

    def p_single(self, i) -> float:
        return float(self.counts[self._index(i)] / self.user_count)

    def p_joint(self, i, j) -> float:
        return float(self.co_counts[self._index(i), self._index(j)] / self.user_count)

    def joint_block(self, items) -> np.ndarray:
        pos = np.array([self._index(i) for i in items], dtype=np.int64)
        return self.co_counts[np.ix_(pos, pos)] / self.user_count


def build_npmi_model(ratings: Iterable[RatingEvent]) -> NpmiModel:
    """Exposure means "has rated", whatever the rating."""
    exposed_by: dict[int, set[int]] = defaultdict(set)
    users: set[int] = set()
    for e in ratings:
        exposed_by[e.item].add(e.user)
        users.add(e.user)
    if not users:
        raise ValueError("cannot build an NPMI model from an empty log")
    ids = sorted(exposed_by)
    user_col = {u: k for k, u in enumerate(sorted(users))}
    incidence = np.zeros((len(ids), len(users)))
    for r, item in enumerate(ids):
        incidence[r, [user_col[u] for u in exposed_by[item]]] = 1.0
    # 0/1 products summed in float64 are exact integers
    co = incidence @ incidence.T
    return NpmiModel(ids, incidence.sum(axis=1), co, len(users))
