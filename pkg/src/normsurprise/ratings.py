"""Rating events and log ingestion (MovieLens ``.dat`` and CSV)."""

from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Iterable, NamedTuple

from normsurprise.errors import DataError

log = logging.getLogger(__name__)

FORMATS = ("movielens-dat", "csv")
CSV_HEADER = ("user", "item", "rating", "timestamp")


class RatingEvent(NamedTuple):
    user: int
    item: int
    rating: int
    timestamp: int


def chronological(events: Iterable[RatingEvent]) -> list[RatingEvent]:
    """Sort by timestamp, then user, then item."""
    return sorted(events, key=lambda e: (e.timestamp, e.user, e.item))


def _event(fields: list[str]) -> RatingEvent:
    if len(fields) != 4:
        raise ValueError(f"expected 4 fields, got {len(fields)}")
    user, item, rating, ts = (int(f.strip()) for f in fields)
    if rating not in (1, 2, 3, 4, 5):
        raise ValueError(f"rating {rating} outside 1..5")
    if ts < 0:
        raise ValueError(f"negative timestamp {ts}")
    if user < 0 or item < 0:
        raise ValueError("ids must be non-negative")
    return RatingEvent(user, item, rating, ts)


def guess_format(path) -> str:
    return "movielens-dat" if Path(path).suffix.lower() == ".dat" else "csv"


def read_ratings(path, fmt: str | None = None) -> tuple[list[RatingEvent], list[tuple[int, str]]]:
    """Parse a rating log, returning ``(events, errors)``.

    ``errors`` holds ``(line_number, reason)`` for every rejected line.
    Events are returned in chronological order.
    """
    fmt = fmt or guess_format(path)
    if fmt not in FORMATS:
        raise DataError(f"unknown ratings format {fmt!r}")
    try:
        fh = open(path, encoding="utf-8", errors="replace", newline="")
    except OSError as exc:
        raise DataError(f"cannot read ratings file {path}: {exc}") from exc

    events: list[RatingEvent] = []
    errors: list[tuple[int, str]] = []
    with fh:
        if fmt == "movielens-dat":
            rows = ((n, line.rstrip("\r\n").split("::")) for n, line in enumerate(fh, 1))
        else:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(h.strip().lower() for h in header) != CSV_HEADER:
                raise DataError(f"{path}: CSV header must be {','.join(CSV_HEADER)}")
            rows = ((reader.line_num, row) for row in reader)
        for lineno, fields in rows:
            if not fields or fields == [""]:
                continue
            try:
                events.append(_event(fields))
            except ValueError as exc:
                errors.append((lineno, str(exc)))

    if errors:
        log.warning("%s: rejected %d malformed line(s), first at line %d (%s)",
                    path, len(errors), errors[0][0], errors[0][1])
    if not events:
        raise DataError(f"{path}: no valid rating lines")
    return chronological(events), errors


def parse_ratings(path, fmt: str | None = None) -> list[RatingEvent]:
    return read_ratings(path, fmt)[0]


def write_ratings_csv(path, events: Iterable[RatingEvent]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for e in events:
            writer.writerow([e.user, e.item, e.rating, e.timestamp])
