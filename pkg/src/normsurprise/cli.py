"""Command-line entry point: ``normsurprise {evaluate,oracle,synth,matrix}``.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

from normsurprise import __version__
from normsurprise.config import RunConfig, read_config_file
from normsurprise.distances import DistanceMatrix
from normsurprise.errors import DataError, UsageError

log = logging.getLogger("normsurprise")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _threads_default() -> int:
    return os.cpu_count() or 1


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    # defaults live in RunConfig; None here means "not given"
    p.add_argument("--config", help="key=value file; flags override it")
    p.add_argument("--ratings", dest="ratings_path")
    p.add_argument("--ratings-format", choices=["movielens-dat", "csv"])
    p.add_argument("--descriptions", dest="descriptions_path", help="TSV item_id<TAB>text (model C)")
    p.add_argument("--vectors", dest="vectors_path", help="dense vectors (model P)")
    p.add_argument("--stopwords", dest="stopwords_path", help="one word per line (model C)")
    p.add_argument("--model", choices=["C", "P", "U", "N", "c", "p", "u", "n"])
    p.add_argument("--distance")
    p.add_argument("--algorithm", choices=["knn", "msi", "lsi"])
    p.add_argument("--top-n", type=int)
    p.add_argument("--sample-size", type=int)
    p.add_argument("-k", "--k", type=int, help="neighbourhood size for knn")
    p.add_argument("--frame-size", type=int)
    p.add_argument("--min-common-users", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--mode", choices=["sampled", "exhaustive"])
    p.add_argument("--threads", type=int)
    p.add_argument("--output-dir")


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = read_config_file(args.config) if args.config else {}
    names = {f.name for f in dataclasses.fields(RunConfig)}
    for name in names:
        given = getattr(args, name, None)
        if given is not None:
            values[name] = given
    values.setdefault("threads", _threads_default())
    if values.get("seed", 0) < 0:
        raise UsageError("seed must be non-negative")
    return RunConfig(**values).validate()


def cmd_evaluate(args) -> int:
    from normsurprise import evaluation as ev

    config = config_from_args(args)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    series = ev.run_series(config)
    summary = ev.summarize(series) if len(series) else None
    stem = f"{config.model}-{config.distance}-{config.algorithm}-{config.mode}"
    ev.write_series_csv(out / f"series-{stem}.csv", series)
    record = ev.summary_record(config, summary, series.fingerprint)
    ev.write_summary_json(out / f"summary-{stem}.json", record)

    print(f"{'Model':<6}{'Distance':<16}{'Algorithm':<10}{'Median':>8}{'Mean':>8}{'St.Dev.':>9}{'n':>5}")
    if summary is None:
        print(f"{config.model:<6}{record['distance']:<16}{config.algorithm:<10}"
              f"{'-':>8}{'-':>8}{'-':>9}{0:>5}")
    else:
        print(f"{config.model:<6}{record['distance']:<16}{config.algorithm:<10}"
              f"{summary.median:>8.3f}{summary.mean:>8.3f}{summary.stdev:>9.3f}"
              f"{summary.n_intervals:>5}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    from normsurprise.oracle import MAX_PERMUTED, validate_greedy

    lo, hi = args.min_size, args.max_size
    if not 1 <= lo <= hi:
        raise UsageError("need 1 <= --min-size <= --max-size")
    if hi > MAX_PERMUTED:
        raise UsageError(f"--max-size {hi} exceeds the enumeration cap of {MAX_PERMUTED}")
    if args.instances < 1:
        raise UsageError("--instances must be positive")
    kinds = [k for k in args.distances.split(",") if k.strip()]
    try:
        report = validate_greedy(args.instances, (lo, hi), kinds, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print(report.render())
    if args.csv:
        Path(args.csv).write_text(report.to_csv(), encoding="utf-8")
    return EXIT_OK


def cmd_synth(args) -> int:
    from normsurprise import synth
    from normsurprise.ratings import write_ratings_csv

    out = Path(args.output)
    if args.kind == "world":
        world = synth.topic_world(args.items, args.users, args.events, args.topics, seed=args.seed)
        paths = world.write(out)
        for name, path in paths.items():
            print(f"{name}: {path}")
        return EXIT_OK
    if args.events % args.frame_size:
        raise UsageError("--events must be a multiple of --frame-size")
    n_frames = args.events // args.frame_size
    if args.five_star is not None:
        five = [args.five_star] * (n_frames - 1)
    elif n_frames == len(synth.DEFAULT_FIVE_STAR) + 1:
        five = list(synth.DEFAULT_FIVE_STAR)
    else:
        five = [args.shared] * (n_frames - 1)
    try:
        events = synth.overlap_log(
            n_frames, args.frame_size, args.users, args.shared, five, args.items,
            profile=args.overlap, seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out.parent.mkdir(parents=True, exist_ok=True)
    write_ratings_csv(out, events)
    print(f"wrote {len(events)} events in {n_frames} frames to {out}")
    return EXIT_OK


def cmd_matrix(args) -> int:
    if args.action == "inspect":
        dm = DistanceMatrix.load(args.path)
        n = len(dm)
        print(f"items: {n}")
        if n > 1:
            import numpy as np

            upper = dm.values[np.triu_indices(n, k=1)]
            print(f"distance min/mean/max: {upper.min():.6g} {upper.mean():.6g} {upper.max():.6g}")
        if args.csv:
            dm.to_csv(args.csv)
        return EXIT_OK

    from normsurprise.evaluation import build_matrix
    from normsurprise.ratings import parse_ratings

    config = config_from_args(args)
    ratings = parse_ratings(config.ratings_path, config.ratings_format)
    dm = build_matrix(config, ratings)
    dm.save(args.path)
    if args.csv:
        dm.to_csv(args.csv)
    print(f"wrote {len(dm)}x{len(dm)} {config.distance} matrix (model {config.model}) to {args.path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="normsurprise", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("evaluate", help="measure normalised surprise over a rating log")
    _add_run_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("oracle", help="exact vs greedy potential surprise on random instances")
    p.add_argument("--instances", type=int, default=200)
    p.add_argument("--min-size", type=int, default=5)
    p.add_argument("--max-size", type=int, default=8)
    p.add_argument("--distances", default="euclidean,cosine,jaccard,jensen-shannon")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", help="also write per-instance rows to this file")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("synth", help="write a synthetic rating log")
    p.add_argument("--kind", choices=["overlap", "world"], default="overlap")
    p.add_argument("--overlap", choices=["engineered", "disjoint"], default="engineered")
    p.add_argument("--events", type=int, default=6000)
    p.add_argument("--frame-size", type=int, default=1500)
    p.add_argument("--users", type=int, default=100, help="users per frame (overlap) or in total (world)")
    p.add_argument("--shared", type=int, default=40, help="users shared by consecutive frames")
    p.add_argument("--five-star", type=int, help="shared users given a 5-star rating, per pair")
    p.add_argument("--items", type=int, default=400)
    p.add_argument("--topics", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True, help="CSV file (overlap) or directory (world)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("matrix", help="build or inspect a cached distance matrix")
    p.add_argument("action", choices=["build", "inspect"])
    p.add_argument("path", help="SBDM file")
    p.add_argument("--csv", help="also export as CSV")
    _add_run_flags(p)
    p.set_defaults(func=cmd_matrix)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError, ValueError, KeyError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
