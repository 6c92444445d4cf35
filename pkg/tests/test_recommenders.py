import numpy as np
import pytest

from normsurprise.core import greedy_bounds
from normsurprise.distances import DistanceMatrix, build_distance_matrix
from normsurprise.recommenders import (
    Scorer,
    UserHistory,
    knn_score,
    lsi_score,
    msi_score,
    rank_top_n,
)


def matrix(ids, rows):
    return DistanceMatrix(ids, np.array(rows, dtype=float))


# item 0 is the candidate, 1 and 2 are rated
TRIO = matrix([0, 1, 2], [[0, 0, 1], [0, 0, 2], [1, 2, 0]])


def test_knn_hand_example():
    hist = UserHistory({1: 5.0, 2: 1.0})
    # sims 1 and 1/2: (5 + 0.5) / 1.5
    assert knn_score(0, hist, TRIO) == pytest.approx(11 / 3)


def test_knn_k_limits_neighbours():
    hist = UserHistory({1: 5.0, 2: 1.0})
    assert knn_score(0, hist, TRIO, k=1) == 5.0


def test_knn_distance_ties_go_to_smaller_id():
    dm = matrix([0, 1, 2], [[0, 1, 1], [1, 0, 1], [1, 1, 0]])
    assert knn_score(0, UserHistory({2: 1.0, 1: 4.0}), dm, k=1) == 4.0


def test_msi_and_lsi():
    dm = matrix([0, 1, 2], [[0, 2, 3], [2, 0, 1], [3, 1, 0]])
    hist = UserHistory({1: 3.0, 2: 3.0})
    assert msi_score(0, hist, dm) == 2.0
    assert lsi_score(0, hist, dm) == -2.0


def test_candidate_already_rated():
    with pytest.raises(ValueError):
        knn_score(1, UserHistory({1: 5.0}), TRIO)


def test_empty_history():
    with pytest.raises(ValueError):
        UserHistory({})


def test_unknown_algorithm():
    with pytest.raises(ValueError):
        Scorer("random", TRIO)


class TestRankTopN:
    def test_ties_by_ascending_id(self):
        dm = matrix([0, 1, 2, 3], [[0, 1, 1, 2], [1, 0, 3, 3], [1, 3, 0, 3], [2, 3, 3, 0]])
        hist = UserHistory({0: 4.0})
        assert rank_top_n([3, 2, 1], Scorer("msi", dm), hist, 3) == (3, 1, 2)
        assert rank_top_n([3, 2, 1], Scorer("lsi", dm), hist, 2) == (1, 2)

    def test_bad_top_n(self):
        with pytest.raises(ValueError):
            rank_top_n([1, 2], Scorer("msi", TRIO), UserHistory({0: 1.0}), 3)

    def test_duplicate_candidates(self):
        with pytest.raises(ValueError):
            rank_top_n([1, 1], Scorer("msi", TRIO), UserHistory({0: 1.0}), 1)


@pytest.fixture(scope="module")
def cloud():
    rng = np.random.default_rng(4)
    pts = {i: rng.random(3) for i in range(40)}
    dm = build_distance_matrix(pts, "euclidean", pts)
    hist = UserHistory({i: float(1 + i % 5) for i in range(0, 40, 4)})
    unknown = [i for i in range(40) if i % 4]
    return dm, hist, unknown


def test_msi_top_pick_is_greedy_max_first(cloud):
    dm, hist, unknown = cloud
    top = rank_top_n(unknown, Scorer("msi", dm), hist, 1)
    assert top[0] == greedy_bounds(unknown, hist.exposed, dm, 1).max_seq[0]


def test_lsi_top_pick_is_greedy_min_first(cloud):
    dm, hist, unknown = cloud
    top = rank_top_n(unknown, Scorer("lsi", dm), hist, 1)
    assert top[0] == greedy_bounds(unknown, hist.exposed, dm, 1).min_seq[0]


def test_knn_scores_within_rating_range(cloud):
    dm, hist, unknown = cloud
    scores = Scorer("knn", dm, k=3).scores(unknown, hist)
    assert (scores >= 1.0).all() and (scores <= 5.0).all()
