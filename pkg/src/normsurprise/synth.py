"""Synthetic rating logs.

``overlap_log`` engineers frame membership and 5-star placement so the
eligible intervals are known in advance. ``topic_world`` produces a small
recommendation world (ratings, descriptions, dense vectors) driven by
latent topics, so every representation model can be built from it.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from normsurprise.ratings import RatingEvent, write_ratings_csv
from normsurprise.representations import save_dense_vectors

PROFILES = ("engineered", "disjoint")
DEFAULT_FIVE_STAR = (35, 20, 30)


def frame_users(n_frames: int, users_per_frame: int, shared: int) -> list[range]:
    """Frame ``f`` (0-based) covers a contiguous id block; consecutive
    blocks overlap in ``shared`` ids."""
    step = users_per_frame - shared
    return [range(f * step, f * step + users_per_frame) for f in range(n_frames)]


def overlap_log(
    n_frames: int = 4,
    frame_size: int = 1500,
    users_per_frame: int = 100,
    shared: int = 40,
    five_star_shared: Sequence[int] = DEFAULT_FIVE_STAR,
    n_items: int = 400,
    profile: str = "engineered",
    seed: int = 0,
) -> list[RatingEvent]:
    """A log of ``n_frames * frame_size`` events with controlled overlap.

    ``engineered``: frames ``f`` and ``f+1`` share ``shared`` users; the
    first ``five_star_shared[f]`` of them rate some item 5 stars in frame
    ``f+1`` and the rest rate only 1-4 there. ``disjoint``: no user
    appears in two frames.
    """
    if profile not in PROFILES:
        raise ValueError(f"profile must be one of {PROFILES}")
    if profile == "disjoint":
        shared = 0
        five_star_shared = [0] * (n_frames - 1)
    if not 0 <= shared < users_per_frame:
        raise ValueError("shared must lie in 0..users_per_frame-1")
    if len(five_star_shared) != n_frames - 1:
        raise ValueError("five_star_shared needs one entry per consecutive frame pair")
    if any(not 0 <= c <= shared for c in five_star_shared):
        raise ValueError("five_star_shared entries must lie in 0..shared")
    if frame_size < users_per_frame:
        raise ValueError("every frame user needs at least one event")
    per_user = -(-frame_size // users_per_frame)
    if per_user * 2 > n_items:
        raise ValueError("too few items for users spanning two frames")

    rng = np.random.default_rng(seed)
    blocks = frame_users(n_frames, users_per_frame, shared)
    seen: dict[int, set[int]] = {}
    events = []
    ts = 0
    for f, block in enumerate(blocks):
        users = list(block)
        if f == 0:
            needs_five: set[int] = set()
            blocked: set[int] = set()
        else:
            head = users[:shared]
            needs_five = set(head[: five_star_shared[f - 1]])
            blocked = set(head[five_star_shared[f - 1] :])
        # every user gets one event, the rest are spread at random
        owners = users + list(rng.choice(users, size=frame_size - len(users)))
        owners = [owners[k] for k in rng.permutation(len(owners))]
        placed_five: set[int] = set()
        for user in owners:
            known = seen.setdefault(user, set())
            item = int(rng.choice([i for i in range(n_items) if i not in known]))
            known.add(item)
            if user in needs_five and user not in placed_five:
                rating = 5
                placed_five.add(user)
            elif user in blocked or f == 0 or user in needs_five:
                rating = int(rng.integers(1, 5))
            else:
                rating = int(rng.integers(1, 6))
            events.append(RatingEvent(int(user), item, rating, ts))
            ts += 1
    return events


@dataclass
class World:
    ratings: list[RatingEvent]
    descriptions: dict[int, str]
    vectors: dict[int, np.ndarray]
    item_topics: np.ndarray

    def write(self, directory) -> dict[str, str]:
        out = Path(directory)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "ratings": str(out / "ratings.csv"),
            "descriptions": str(out / "descriptions.tsv"),
            "vectors": str(out / "vectors.txt"),
        }
        write_ratings_csv(paths["ratings"], self.ratings)
        with open(paths["descriptions"], "w", encoding="utf-8") as fh:
            for item in sorted(self.descriptions):
                fh.write(f"{item}\t{self.descriptions[item]}\n")
        save_dense_vectors(paths["vectors"], self.vectors)
        return paths


_SYLLABLES = ("ka", "lo", "mi", "ra", "tu", "ve", "so", "ni", "pa", "de", "qu", "zo")
_FILLER = ("the", "a", "of", "and", "in", "with", "to", "is", "on", "for")


def _vocabulary(rng: np.random.Generator, size: int) -> list[str]:
    words: set[str] = set()
    while len(words) < size:
        n = int(rng.integers(3, 5))
        words.add("".join(rng.choice(_SYLLABLES, size=n)))
    return sorted(words)


def topic_world(
    n_items: int = 60,
    n_users: int = 40,
    n_events: int = 1200,
    n_topics: int = 4,
    dim: int = 8,
    seed: int = 0,
) -> World:
    """Users prefer some topics, rate items of preferred topics higher and
    consume them more often. Descriptions draw from topic vocabularies;
    dense vectors are noisy topic centroids."""
    if n_events > n_items * n_users:
        raise ValueError("more events than distinct (user, item) pairs")
    rng = np.random.default_rng(seed)
    topics = rng.integers(0, n_topics, size=n_items)
    topics[:n_topics] = np.arange(n_topics)
    affinity = rng.dirichlet(np.full(n_topics, 0.5), size=n_users)

    vocab = _vocabulary(rng, 30 * n_topics + 40)
    topic_words = [vocab[t * 30 : (t + 1) * 30] for t in range(n_topics)]
    shared_words = vocab[30 * n_topics :]
    descriptions = {}
    for item in range(n_items):
        n_words = int(rng.integers(16, 30))
        own = rng.random(n_words) < 0.75
        words = [
            str(rng.choice(topic_words[topics[item]])) if o else str(rng.choice(shared_words))
            for o in own
        ]
        for pos in sorted(rng.choice(n_words, size=n_words // 3, replace=False)):
            words.insert(int(pos), str(rng.choice(_FILLER)))
        descriptions[item] = " ".join(words).capitalize() + "."

    centroids = rng.normal(size=(n_topics, dim)) * 2.0
    vectors = {i: centroids[topics[i]] + rng.normal(scale=0.6, size=dim) for i in range(n_items)}

    # consumption propensity per (user, item)
    weight = affinity[:, topics] + 0.05
    remaining = {u: set(range(n_items)) for u in range(n_users)}
    events = []
    for ts in range(n_events):
        # items become available progressively: a simple release schedule
        horizon = max(n_topics, int(n_items * min(1.0, 0.3 + 0.7 * ts / max(n_events - 1, 1))))
        while True:
            user = int(rng.integers(n_users))
            pool = [i for i in remaining[user] if i < horizon]
            if pool:
                break
        p = weight[user, pool] / weight[user, pool].sum()
        item = int(rng.choice(pool, p=p))
        remaining[user].discard(item)
        like = affinity[user, topics[item]]
        rating = int(np.clip(np.rint(1.5 + 4.0 * like + rng.normal(scale=0.7)), 1, 5))
        events.append(RatingEvent(user, item, rating, ts))
    return World(events, descriptions, vectors, topics)
