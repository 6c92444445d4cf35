"""Offline one-plus-random harness for normalised surprise.

The log is cut into fixed-size chronological timeframes. Each pair of
consecutive frames sharing enough users (with a 5-star rating in the later
frame) defines an eligible interval: all frames from the first one up to
the later frame of the pair. Every interval is measured independently and
the measurements form a time series.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from normsurprise.config import RunConfig, fingerprint, input_digests, matrix_fingerprint
from normsurprise.core import greedy_bounds, normalized_surprise
from normsurprise.distances import DistanceFn, DistanceMatrix, build_distance_matrix
from normsurprise.errors import DataError
from normsurprise.ratings import RatingEvent, chronological, parse_ratings
from normsurprise.recommenders import Scorer, UserHistory, rank_top_n
from normsurprise import representations as reps

log = logging.getLogger(__name__)

SERIES_HEADER = ("interval", "end_frame", "n_users", "mean_ssn", "min_ssn", "max_ssn")


@dataclass(frozen=True)
class Timeframe:
    index: int  # 1-based
    events: tuple[RatingEvent, ...]

    @property
    def user_set(self) -> frozenset[int]:
        return frozenset(e.user for e in self.events)


@dataclass(frozen=True)
class EligibleInterval:
    end_frame: int  # 1-based; the interval covers frames 1..end_frame
    eval_users: frozenset[int]

    @property
    def frames(self) -> range:
        return range(1, self.end_frame + 1)


@dataclass(frozen=True)
class Measurement:
    interval: int
    end_frame: int
    per_user: dict[int, float]
    mean: float

    @property
    def n_users(self) -> int:
        return len(self.per_user)

    @property
    def min(self) -> float:
        return min(self.per_user.values())

    @property
    def max(self) -> float:
        return max(self.per_user.values())


@dataclass
class SurpriseSeries:
    measurements: list[Measurement] = field(default_factory=list)
    fingerprint: str = ""

    def __len__(self) -> int:
        return len(self.measurements)

    @property
    def means(self) -> list[float]:
        return [m.mean for m in self.measurements]


@dataclass(frozen=True)
class Summary:
    median: float
    mean: float
    stdev: float
    n_intervals: int
    stdev_defined: bool = True


def segment(
    ratings: Iterable[RatingEvent], frame_size: int = 1500, min_common_users: int = 30
) -> tuple[list[Timeframe], list[EligibleInterval]]:
    """Split a log into timeframes and find the eligible intervals.

    The trailing partial frame is dropped. A pair of consecutive frames
    qualifies when at least ``min_common_users`` users appear in both and
    rate some item 5 stars in the later frame; those users are evaluated.
    """
    if frame_size < 1 or min_common_users < 1:
        raise ValueError("frame_size and min_common_users must be positive")
    events = chronological(ratings)
    n_frames = len(events) // frame_size
    frames = [
        Timeframe(k + 1, tuple(events[k * frame_size : (k + 1) * frame_size]))
        for k in range(n_frames)
    ]
    intervals = []
    for prev, later in zip(frames, frames[1:]):
        five_star = {e.user for e in later.events if e.rating == 5}
        qualifying = prev.user_set & later.user_set & five_star
        if len(qualifying) >= min_common_users:
            intervals.append(EligibleInterval(later.index, frozenset(qualifying)))
    return frames, intervals


def _user_seed(seed: int, end_frame: int, user: int) -> np.random.Generator:
    # one independent stream per (interval, user)
    return np.random.default_rng(np.random.SeedSequence([seed, end_frame, user]))


def _histories(events: Sequence[RatingEvent], users, known) -> dict[int, dict[int, int]]:
    history: dict[int, dict[int, int]] = {u: {} for u in users}
    for e in events:
        if e.user in history and e.item in known:
            history[e.user][e.item] = e.rating
    return history


def evaluate_user(
    user: int,
    ratings: dict[int, int],
    universe: Sequence[int],
    scorer: Scorer,
    *,
    top_n: int,
    sample_size: int,
    rng: np.random.Generator | None,
    mode: str,
) -> float | None:
    """Normalised surprise of one user's top-N list; ``None`` if the user
    cannot be evaluated (nothing rated, or nothing left to recommend)."""
    if not ratings:
        log.warning("user %d has no representable rated items; skipped", user)
        return None
    hist = UserHistory(ratings)
    unknown = [i for i in universe if i not in hist.exposed]
    if not unknown:
        log.warning("user %d has no unknown items; skipped", user)
        return None
    d = scorer.distances
    n = min(top_n, len(unknown))
    bounds = greedy_bounds(unknown, hist.exposed, d, n)
    if mode == "exhaustive":
        if scorer.kind == "msi":
            seq = bounds.max_seq
        elif scorer.kind == "lsi":
            seq = bounds.min_seq
        else:
            seq = rank_top_n(unknown, scorer, hist, n)
    elif mode == "sampled":
        size = min(sample_size, len(unknown))
        pool = rng.choice(np.asarray(unknown, dtype=np.int64), size=size, replace=False)
        seq = rank_top_n(pool, scorer, hist, n)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return normalized_surprise(seq, unknown, hist.exposed, d, bounds=bounds)


def evaluate_interval(
    interval: EligibleInterval,
    frames: Sequence[Timeframe],
    scorer: Scorer,
    *,
    top_n: int = 10,
    sample_size: int = 1000,
    seed: int = 0,
    mode: str = "sampled",
    threads: int = 1,
    ordinal: int = 1,
) -> Measurement:
    """Run the one-plus-random measurement over one eligible interval.

    The item universe is every item rated within the interval (the log
    prefix, so first ratings fall inside it) that has a representation.
    A user's exposed set is what they rated within the interval.
    """
    if top_n > sample_size:
        raise ValueError("top_n cannot exceed sample_size")
    d: DistanceMatrix = scorer.distances
    events = [e for f in frames[: interval.end_frame] for e in f.events]
    universe = sorted({e.item for e in events if e.item in d})
    users = sorted(interval.eval_users)
    histories = _histories(events, users, set(universe))

    def run(user: int) -> float | None:
        rng = _user_seed(seed, interval.end_frame, user) if mode == "sampled" else None
        return evaluate_user(
            user, histories[user], universe, scorer,
            top_n=top_n, sample_size=sample_size, rng=rng, mode=mode,
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(run, users))
    else:
        values = [run(u) for u in users]

    per_user = {u: v for u, v in zip(users, values) if v is not None}
    if not per_user:
        raise DataError(f"interval ending at frame {interval.end_frame}: no evaluable users")
    mean = math.fsum(per_user.values()) / len(per_user)
    return Measurement(ordinal, interval.end_frame, per_user, mean)


def measure_series(
    ratings: Iterable[RatingEvent],
    scorer: Scorer,
    *,
    top_n: int = 10,
    sample_size: int = 1000,
    frame_size: int = 1500,
    min_common_users: int = 30,
    seed: int = 0,
    mode: str = "sampled",
    threads: int = 1,
) -> SurpriseSeries:
    """Segment ``ratings`` and measure every eligible interval in order."""
    frames, intervals = segment(ratings, frame_size, min_common_users)
    series = SurpriseSeries()
    for ordinal, interval in enumerate(intervals, 1):
        try:
            m = evaluate_interval(
                interval, frames, scorer, top_n=top_n, sample_size=sample_size,
                seed=seed, mode=mode, threads=threads, ordinal=ordinal,
            )
        except Exception as exc:
            raise DataError(f"interval {ordinal} (end frame {interval.end_frame}): {exc}") from exc
        series.measurements.append(m)
    return series


def build_representation(config: RunConfig, ratings: Sequence[RatingEvent]):
    """Vectors (models C, P, U) or an NPMI model (N), restricted to rated items."""
    rated = {e.item for e in ratings}
    if config.model == "C":
        catalog = reps.load_descriptions(config.descriptions_path)
        stop = reps.load_stopwords(config.stopwords_path) if config.stopwords_path else None
        vectors, rejected = reps.build_count_vsm(catalog, stop)
    elif config.model == "P":
        vectors, rejected = reps.load_dense_vectors(config.vectors_path), []
    elif config.model == "U":
        vectors, rejected = reps.build_user_item(ratings)
    elif config.model == "N":
        return reps.build_npmi_model(ratings)
    else:
        raise ValueError(f"unknown model {config.model!r}")
    if rejected:
        log.info("model %s rejected %d item(s)", config.model, len(rejected))
    return {i: v for i, v in vectors.items() if i in rated}


def build_matrix(config: RunConfig, ratings: Sequence[RatingEvent]) -> DistanceMatrix:
    rep = build_representation(config, ratings)
    if config.distance == "npmi":
        return build_distance_matrix(rep.items, DistanceFn("npmi", rep), rep)
    if not rep:
        raise DataError("no rated item has a representation")
    return build_distance_matrix(rep.keys(), DistanceFn(config.distance), rep, config.threads)


def cached_matrix(config: RunConfig, ratings: Sequence[RatingEvent], digests=None) -> DistanceMatrix:
    """Load the distance matrix from ``<output_dir>/cache`` or build and store it."""
    key = matrix_fingerprint(config, digests)
    cache = Path(config.output_dir) / "cache" / f"{key[:32]}.sbdm"
    if cache.exists():
        log.info("reusing distance matrix %s", cache)
        return DistanceMatrix.load(cache)
    matrix = build_matrix(config, ratings)
    cache.parent.mkdir(parents=True, exist_ok=True)
    tmp = cache.with_suffix(".tmp")
    matrix.save(tmp)
    tmp.replace(cache)
    return matrix


def run_series(config: RunConfig) -> SurpriseSeries:
    """Build the representation and distance matrix once, then measure
    every eligible interval."""
    config.validate()
    digests = input_digests(config)
    ratings = parse_ratings(config.ratings_path, config.ratings_format)
    matrix = cached_matrix(config, ratings, digests)
    scorer = Scorer(config.algorithm, matrix, config.k)
    series = measure_series(
        ratings, scorer, top_n=config.top_n, sample_size=config.sample_size,
        frame_size=config.frame_size, min_common_users=config.min_common_users,
        seed=config.seed, mode=config.mode, threads=config.threads,
    )
    series.fingerprint = fingerprint(config, digests)
    return series


def summarize(series: SurpriseSeries | Sequence[Measurement]) -> Summary:
    """Median, mean and sample standard deviation of per-interval means.

    With a single interval the deviation is undefined; it is reported as
    0 with ``stdev_defined=False``.
    """
    means = [m.mean for m in (series.measurements if isinstance(series, SurpriseSeries) else series)]
    if not means:
        raise ValueError("cannot summarise an empty series")
    mean = math.fsum(means) / len(means)
    if len(means) == 1:
        return Summary(means[0], mean, 0.0, 1, stdev_defined=False)
    return Summary(statistics.median(means), mean, statistics.stdev(means), len(means))


def write_series_csv(path, series: SurpriseSeries) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SERIES_HEADER)
        for m in series.measurements:
            writer.writerow([m.interval, m.end_frame, m.n_users, repr(m.mean), repr(m.min), repr(m.max)])


def summary_record(config: RunConfig, summary: Summary | None, fp: str = "") -> dict:
    record = {
        "model": config.model,
        "distance": config.distance.replace("_", "-"),
        "algorithm": config.algorithm,
        "mode": config.mode,
        "median": summary.median if summary else None,
        "mean": summary.mean if summary else None,
        "stdev": summary.stdev if summary else None,
        "n_intervals": summary.n_intervals if summary else 0,
    }
    if summary is not None and not summary.stdev_defined:
        record["stdev_defined"] = False
    record["fingerprint"] = fp
    return record


def write_summary_json(path, record: dict) -> None:
    Path(path).write_text(json.dumps(record, indent=2) + "\n", encoding="utf-8")
