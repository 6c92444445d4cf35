"""Acceptance gate. Each test prints one PASS/FAIL line for its criterion.

Run with ``pytest tests/test_acceptance.py -v``; the lines appear even
when output capture is on.
"""

import subprocess
import sys
import time
from pathlib import Path

import pytest

from normsurprise import synth
from normsurprise.cli import main
from normsurprise.config import RunConfig, compatible_pairs
from normsurprise.evaluation import build_matrix, measure_series, segment, summarize
from normsurprise.oracle import GAP_TOL, ORACLE_KINDS, validate_greedy
from normsurprise.ratings import parse_ratings
from normsurprise.recommenders import Scorer

TOL = 1e-9
PAIRS = compatible_pairs()

# small world: 60 items, 40 users
SMALL = dict(n_items=60, n_users=40, n_events=1200, seed=0)
SMALL_RUN = dict(frame_size=200, min_common_users=5, sample_size=30)
# desk world: 400 items, 300 users
DESK = dict(n_items=400, n_users=300, n_events=12000, seed=1)
DESK_RUN = dict(frame_size=1000, min_common_users=30, sample_size=200)


@pytest.fixture
def verdict(capsys):
    def emit(criterion: int, name: str, ok: bool, detail: str = "") -> None:
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {name}"
                  + (f" ({detail})" if detail else ""))
        assert ok, detail
    return emit


def _world(root: Path, params: dict) -> dict[str, str]:
    return synth.topic_world(**params).write(root)


@pytest.fixture(scope="module")
def small_world(tmp_path_factory):
    return _world(tmp_path_factory.mktemp("small"), SMALL)


@pytest.fixture(scope="module")
def desk_world(tmp_path_factory):
    return _world(tmp_path_factory.mktemp("desk"), DESK)


def _config(paths: dict, model: str, distance: str, **kw) -> RunConfig:
    return RunConfig(
        ratings_path=paths["ratings"], descriptions_path=paths["descriptions"],
        vectors_path=paths["vectors"], model=model, distance=distance, **kw,
    ).validate()


def _means(paths: dict, run: dict, mode: str, algorithms) -> dict[tuple, float]:
    ratings = parse_ratings(paths["ratings"])
    out = {}
    for model, distance in PAIRS:
        config = _config(paths, model, distance, mode=mode, **run)
        matrix = build_matrix(config, ratings)
        for alg in algorithms:
            series = measure_series(
                ratings, Scorer(alg, matrix), top_n=10, sample_size=config.sample_size,
                frame_size=config.frame_size, min_common_users=config.min_common_users,
                seed=0, mode=mode,
            )
            out[model, distance, alg] = summarize(series).mean if len(series) else None
    return out


def test_criterion_1_greedy_sandwich(verdict):
    start = time.perf_counter()
    report = validate_greedy(instance_count=200, size_range=(5, 8), distance_kinds=ORACLE_KINDS, seed=0)
    elapsed = time.perf_counter() - start
    violations = report.violations(TOL)
    rates = ", ".join(
        f"{s['distance']} max={s['max_zero_gap_rate']:.0%} min={s['min_zero_gap_rate']:.0%}"
        for s in report.summary(TOL)
    )
    underestimated = [r for r in report.for_distance("euclidean") if r.max_gap > GAP_TOL]
    ok = (not violations and underestimated and len(report.rows) == 800 and elapsed < 120)
    verdict(1, "greedy bounds sandwich exact bounds",
            bool(ok), f"{len(violations)} violations; {len(underestimated)} euclidean max gaps; "
            f"{rates}; {elapsed:.1f}s")


@pytest.mark.parametrize("world,run", [("small_world", SMALL_RUN), ("desk_world", DESK_RUN)])
def test_criterion_2_exhaustive_extremes(verdict, request, world, run):
    paths = request.getfixturevalue(world)
    start = time.perf_counter()
    means = _means(paths, run, "exhaustive", ("msi", "lsi"))
    elapsed = time.perf_counter() - start
    bad = [
        f"{m}/{d}/{a}={v}" for (m, d, a), v in means.items()
        if v is None or abs(v - (1.0 if a == "msi" else 0.0)) > TOL
    ]
    verdict(2, f"exhaustive MSI=1, LSI=0 on {world} for all {len(PAIRS)} pairs",
            not bad and elapsed < 300, f"{len(bad)} off: {bad[:3]}; {elapsed:.1f}s")


def test_criterion_3_ordering(verdict, desk_world):
    means = _means(desk_world, DESK_RUN, "sampled", ("msi", "knn", "lsi"))
    bad = []
    for model, distance in PAIRS:
        msi, knn, lsi = (means[model, distance, a] for a in ("msi", "knn", "lsi"))
        if None in (msi, knn, lsi):
            bad.append(f"{model}/{distance}: no intervals")
            continue
        in_range = all(0.0 <= v <= 1.0 for v in (msi, knn, lsi))
        if not (msi > knn > lsi and in_range and 0.0 < knn < 1.0):
            bad.append(f"{model}/{distance}: msi={msi:.3f} knn={knn:.3f} lsi={lsi:.3f}")
    knn_values = [means[m, d, "knn"] for m, d in PAIRS if means[m, d, "knn"] is not None]
    verdict(3, "sampled mean(MSI) > mean(kNN) > mean(LSI), kNN interior",
            not bad, f"{len(bad)} failing pairs {bad[:3]}; "
            f"kNN range {min(knn_values):.3f}..{max(knn_values):.3f}")


def test_criterion_4_invariant_suites(verdict):
    suite = Path(__file__).with_name("test_properties.py")
    start = time.perf_counter()
    result = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", str(suite)],
                            capture_output=True, text=True)
    elapsed = time.perf_counter() - start
    tail = result.stdout.strip().splitlines()[-1] if result.stdout.strip() else result.stderr[-200:]
    verdict(4, "distance axioms and surprise invariants",
            result.returncode == 0 and elapsed < 60, f"{tail}; {elapsed:.1f}s")


EXPECTED_INTERVALS = {2: frozenset(range(60, 95)), 4: frozenset(range(180, 210))}


def test_criterion_5_segmentation(verdict, tmp_path, capsys):
    logs = {}
    for name, extra in (("a", []), ("b", []), ("disjoint", ["--overlap", "disjoint"])):
        path = tmp_path / f"{name}.csv"
        assert main(["synth", "--events", "6000", "--output", str(path), *extra]) == 0
        logs[name] = path
    same_bytes = logs["a"].read_bytes() == logs["b"].read_bytes()
    frames, intervals = segment(parse_ratings(logs["a"]), 1500, 30)
    found = {iv.end_frame: iv.eval_users for iv in intervals}
    d_frames, d_intervals = segment(parse_ratings(logs["disjoint"]), 1500, 30)

    series = []
    for threads in ("1", "4"):
        out = tmp_path / f"eval-{threads}"
        code = main(["evaluate", "--ratings", str(logs["a"]), "--model", "U", "--distance", "cosine",
                     "--threads", threads, "--output-dir", str(out)])
        series.append(code == 0 and (out / "series-U-cosine-knn-sampled.csv").read_bytes())
    capsys.readouterr()
    end_frames = [line.split(",")[1] for line in series[0].decode().splitlines()[1:]] if series[0] else []

    ok = (len(frames) == 4 and found == EXPECTED_INTERVALS and len(d_frames) == 4
          and d_intervals == [] and same_bytes and series[0] and series[0] == series[1]
          and end_frames == ["2", "4"])
    verdict(5, "segmentation of engineered and disjoint logs", bool(ok),
            f"{len(frames)} frames, intervals at {sorted(found)}, disjoint {len(d_intervals)}, "
            f"series frames {end_frames}")


@pytest.mark.parametrize("model,distance,algorithm", [
    ("C", "cosine", "knn"), ("U", "jensen-shannon", "msi"), ("N", "npmi", "lsi"), ("P", "euclidean", "knn"),
])
def test_criterion_6_determinism(verdict, small_world, tmp_path, capsys, model, distance, algorithm):
    stem = f"{model}-{distance.replace('-', '_')}-{algorithm}-sampled"
    outputs = []
    for run, threads in enumerate(("1", "1", "2", "8")):
        out = tmp_path / f"run{run}"
        code = main([
            "evaluate", "--ratings", small_world["ratings"],
            "--descriptions", small_world["descriptions"], "--vectors", small_world["vectors"],
            "--model", model, "--distance", distance, "--algorithm", algorithm,
            "--frame-size", str(SMALL_RUN["frame_size"]),
            "--min-common-users", str(SMALL_RUN["min_common_users"]),
            "--sample-size", str(SMALL_RUN["sample_size"]),
            "--seed", "11", "--threads", threads, "--output-dir", str(out),
        ])
        outputs.append(code == 0 and ((out / f"series-{stem}.csv").read_bytes(),
                                      (out / f"summary-{stem}.json").read_bytes()))
    capsys.readouterr()
    ok = all(outputs) and all(o == outputs[0] for o in outputs)
    verdict(6, f"byte-identical evaluate outputs for {model}/{distance}/{algorithm} "
               "at --threads 1,1,2,8", bool(ok))
