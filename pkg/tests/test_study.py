import numpy as np
import pytest

from conftest import make_sample
from sketchbot.fixtures import fixture
from sketchbot.graph import FIXED_TAU_PRESETS, StrokeGraph
from sketchbot.study import (EdgeScore, approx_threshold, count_peaks, edge_score, match_vertices,
                             preset_sweep, smooth, threshold_study)


def test_approx_threshold_window():
    scores = [1.0, 1.0, 1.0, 0.0, 0.0, 0.0]
    # ranks 2, 3, 4 -> (1 + 1 + 0) / 3
    assert approx_threshold(scores, 3) == pytest.approx(2 / 3)
    assert 0 < approx_threshold(scores, 3) < 1
    assert approx_threshold(scores, 1) == pytest.approx(1.0)  # clipped to ranks 1..2
    assert approx_threshold(scores, 6) == pytest.approx(0.0)  # clipped to ranks 5..6
    assert approx_threshold([0.4, 0.9], 1, k=1) == 0.9


def test_separated_clusters_give_positive_gap():
    scores = [1.0] * 4 + [0.0] * 8
    tau_hat = approx_threshold(scores, 4)
    assert 0 < tau_hat < 1 and tau_hat - np.mean(scores) > 0


def test_smooth_and_peaks():
    np.testing.assert_allclose(smooth([0, 3, 0], 3), [1, 1, 1])
    assert count_peaks([0, 1, 0, 0, 2, 0]) == 2
    assert count_peaks([0, 2, 2, 1]) == 1
    assert count_peaks([5, 5, 5]) == 1


def test_match_vertices_tolerance():
    m = match_vertices([[0, 0], [10, 10], [50, 50]], [[10.5, 10], [0, 1.5]], tol=2)
    assert m == {0: 1, 1: 0}


def test_edge_score_counts():
    truth = {"vertices": [[0, 0], [10, 0], [0, 10]], "edges": [[0, 1], [0, 2]]}
    g = StrokeGraph(np.array([[10, 0.5], [0, 0], [0, 10]]), [(0, 1), (0, 2)])
    sc = edge_score(g, truth)
    assert (sc.tp, sc.n_pred, sc.n_true) == (1, 2, 2)
    assert sc.precision == 0.5 and sc.recall == 0.5
    assert EdgeScore(0, 0, 0).f1 == 1.0


def test_single_image_study():
    s = make_sample(fixture("house"))
    (st,) = threshold_study([s], [3.0])
    counts, _ = st.histogram()
    assert counts.sum() == 1 and len(st.records) == 1
    assert st.records[0].separated


def test_study_skips_trivial_images():
    s = make_sample(fixture("line"))  # a single edge: no non-edge pair exists
    studies = threshold_study([s], [3.0, 5.0])
    assert all(st.skipped == 1 and not st.records for st in studies)


def test_preset_sweep_rows():
    samples = [make_sample(fixture(k)) for k in ("triangle", "square", "cross")]
    rows = preset_sweep(samples)
    assert len(rows) == len(FIXED_TAU_PRESETS) + 1 and rows[-1].adaptive
    for r in rows:
        assert len(r.scores) == 3 and 0 <= r.f1 <= 1
        assert set(r.to_dict()) >= {"precision", "recall", "f1"}
