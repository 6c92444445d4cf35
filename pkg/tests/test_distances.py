import math

import numpy as np
import pytest

from normsurprise.distances import (
    DistanceFn,
    DistanceMatrix,
    aitchison,
    bmt_smooth,
    build_distance_matrix,
    canonical_kind,
    cosine_distance,
    euclidean,
    jensen_shannon,
    npmi_distance,
    weighted_jaccard,
)
from normsurprise.representations import NpmiModel


def test_euclidean():
    assert euclidean((0, 0), (3, 4)) == 5.0
    assert euclidean((1.5, -2), (1.5, -2)) == 0.0
    assert euclidean((1, 1), (2, 2)) == pytest.approx(math.sqrt(2))
    with pytest.raises(ValueError):
        euclidean((1, 2), (1, 2, 3))


def test_cosine():
    assert cosine_distance((1, 2), (2, 4)) == pytest.approx(0.0, abs=1e-15)
    assert cosine_distance((1, 0), (0, 1)) == 1.0
    assert cosine_distance((1, 0), (-1, 0)) == 2.0
    assert cosine_distance((0.3, 0.7, 0.1), (0.3, 0.7, 0.1)) == 0.0
    with pytest.raises(ValueError):
        cosine_distance((0, 0), (1, 0))


def test_weighted_jaccard():
    assert weighted_jaccard((2, 3), (2, 3)) == 0.0
    assert weighted_jaccard((1, 0), (0, 1)) == 1.0
    assert weighted_jaccard((1, 1), (1, 0)) == 0.5
    with pytest.raises(ValueError):
        weighted_jaccard((-1, 1), (1, 1))
    with pytest.raises(ValueError):
        weighted_jaccard((0, 0), (0, 0))


def test_jensen_shannon():
    assert jensen_shannon((1, 3), (2, 6)) == 0.0
    assert jensen_shannon((1, 0), (0, 1)) == 1.0
    # frozen from a 50-digit mpmath evaluation of the base-2 formula
    assert jensen_shannon((0.5, 0.5), (0.25, 0.75)) == pytest.approx(
        0.0487949406953985325810503565691, abs=1e-15
    )
    with pytest.raises(ValueError):
        jensen_shannon((1, -1), (1, 1))


def test_aitchison():
    assert aitchison((1, 2, 3), (2, 4, 6)) == pytest.approx(0.0, abs=1e-15)
    assert aitchison((1, 1), (math.e, 1)) == pytest.approx(1 / math.sqrt(2))
    x, y = np.array([0.2, 1.5, 3.0]), np.array([2.0, 0.1, 0.7])
    assert aitchison(4.0 * x, y) == pytest.approx(aitchison(x, y))
    with pytest.raises(ValueError, match="bmt_smooth"):
        aitchison((1, 0), (1, 1))


def test_aitchison_distance_fn_smooths_zeros():
    d = DistanceFn("aitchison")
    expected = aitchison(bmt_smooth([3, 0]), [0.5, 0.5])
    assert d([3, 0], [1, 1]) == pytest.approx(expected)


class TestBmtSmooth:
    def test_no_zeros_is_closure(self):
        np.testing.assert_allclose(bmt_smooth([1, 3]), [0.25, 0.75])

    def test_hand_example(self):
        # D=2, n=3: replacement (1/2) * 1 / (3 + 1) = 0.125
        np.testing.assert_allclose(bmt_smooth([3, 0], 3), [0.875, 0.125])

    def test_sums_to_one_and_positive(self):
        out = bmt_smooth([0, 5, 0, 2, 0, 0, 9])
        assert out.sum() == pytest.approx(1.0)
        assert (out > 0).all()

    def test_all_zero(self):
        with pytest.raises(ValueError):
            bmt_smooth([0, 0, 0])


def _model(p_i, p_j, p_ij, users=4):
    co = np.array([[p_i, p_ij], [p_ij, p_j]]) * users
    return NpmiModel([10, 20], [p_i * users, p_j * users], co, users)


class TestNpmi:
    def test_perfect_cooccurrence(self):
        assert npmi_distance(10, 20, _model(0.5, 0.5, 0.5)) == 0.0

    def test_independence(self):
        assert npmi_distance(10, 20, _model(0.5, 0.5, 0.25)) == pytest.approx(0.5)

    def test_never_cooccur(self):
        assert npmi_distance(10, 20, _model(0.5, 0.5, 0.0)) == 1.0

    def test_same_item(self):
        assert npmi_distance(10, 10, _model(0.5, 0.5, 0.0)) == 0.0

    def test_unknown_item(self):
        with pytest.raises(KeyError):
            npmi_distance(10, 99, _model(0.5, 0.5, 0.25))

    def test_matrix_matches_scalar(self):
        model = _model(0.5, 0.75, 0.25)
        dm = build_distance_matrix([10, 20], DistanceFn("npmi", model), model)
        assert dm(10, 20) == pytest.approx(npmi_distance(10, 20, model))


def test_canonical_kind():
    assert canonical_kind("Jensen-Shannon") == "jensen_shannon"
    with pytest.raises(ValueError):
        canonical_kind("manhattan")
    with pytest.raises(ValueError):
        DistanceFn("npmi")


class TestMatrix:
    def test_single_item(self):
        dm = build_distance_matrix([7], "euclidean", {7: np.array([1.0])})
        assert dm.values.shape == (1, 1) and dm(7, 7) == 0.0

    def test_collinear_points(self):
        rep = {1: [0.0], 2: [1.0], 3: [3.0]}
        dm = build_distance_matrix(rep, "euclidean", rep)
        assert (dm(1, 2), dm(2, 3), dm(1, 3)) == (1.0, 2.0, 3.0)

    def test_missing_representation(self):
        with pytest.raises(KeyError, match=r"\[4\]"):
            build_distance_matrix([1, 4], "euclidean", {1: [0.0]})

    @pytest.mark.parametrize("kind", ["euclidean", "cosine", "jaccard", "jensen_shannon", "aitchison"])
    def test_matches_scalar_function(self, kind):
        rng = np.random.default_rng(5)
        rep = {i: rng.random(6) * (rng.random(6) > 0.3) + 1e-3 * (i == 0) for i in range(15)}
        rep = {i: v if v.any() else v + 1.0 for i, v in rep.items()}
        dm = build_distance_matrix(rep, kind, rep)
        fn = DistanceFn(kind)
        for i in range(15):
            for j in range(15):
                assert dm(i, j) == pytest.approx(fn(rep[i], rep[j]), abs=1e-12)

    @pytest.mark.parametrize("kind", ["euclidean", "cosine", "jaccard", "jensen_shannon", "aitchison"])
    def test_symmetric_zero_diagonal_50_items(self, kind):
        rng = np.random.default_rng(17)
        rep = {i: rng.random(4) + 0.01 for i in range(50)}
        dm = build_distance_matrix(rep, kind, rep)
        assert np.array_equal(dm.values, dm.values.T)
        assert (np.diag(dm.values) == 0).all()

    def test_npmi_symmetric(self):
        rng = np.random.default_rng(2)
        inc = rng.random((50, 30)) < 0.3
        inc[:, 0] = True
        model = NpmiModel(range(50), inc.sum(1), inc @ inc.T.astype(float), 30)
        dm = build_distance_matrix(range(50), DistanceFn("npmi", model), model)
        assert np.array_equal(dm.values, dm.values.T)
        assert (np.diag(dm.values) == 0).all()
        assert ((dm.values >= 0) & (dm.values <= 1)).all()

    @pytest.mark.parametrize("kind", ["euclidean", "cosine", "jensen_shannon"])
    def test_thread_count_invariant(self, kind):
        rng = np.random.default_rng(8)
        rep = {i: rng.random(20) for i in range(60)}
        one = build_distance_matrix(rep, kind, rep, threads=1)
        four = build_distance_matrix(rep, kind, rep, threads=4)
        assert one == four

    def test_sbdm_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        rep = {i * 3: rng.random(3) for i in range(10)}
        dm = build_distance_matrix(rep, "cosine", rep)
        dm.save(tmp_path / "m.sbdm")
        raw = (tmp_path / "m.sbdm").read_bytes()
        assert raw[:4] == b"SBDM"
        assert len(raw) == 12 + 4 * 10 + 8 * 45
        assert DistanceMatrix.load(tmp_path / "m.sbdm") == dm

    def test_sbdm_rejects_garbage(self, tmp_path):
        (tmp_path / "bad.sbdm").write_bytes(b"NOPE" + bytes(20))
        with pytest.raises(ValueError):
            DistanceMatrix.load(tmp_path / "bad.sbdm")

    def test_csv_export(self, tmp_path):
        rep = {1: [0.0], 2: [2.0]}
        build_distance_matrix(rep, "euclidean", rep).to_csv(tmp_path / "m.csv")
        lines = (tmp_path / "m.csv").read_text().splitlines()
        assert lines == ["item,1,2", "1,0.0,2.0", "2,2.0,0.0"]
