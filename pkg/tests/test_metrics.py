import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sketchbot.metrics import (WeightScheme, class_weights, iou, metrics_report, read_probmap,
                               softmax_map, weighted_xent, write_probmap)
from sketchbot.raster import labels_to_probmap

OMEGA = np.array([100 / 240, 100 / 45, 100 / 15])


def counts_image(counts):
    return np.repeat(np.arange(len(counts)), counts).reshape(10, -1).astype(np.uint8)


def one_pixel(p, label):
    return np.asarray(p, float).reshape(3, 1, 1), np.array([[label]], np.uint8)


def test_softmax_examples():
    np.testing.assert_allclose(softmax_map(np.zeros((3, 1, 1)))[:, 0, 0], [1 / 3] * 3)
    got = softmax_map(np.array([1.0, 0, 0]).reshape(3, 1, 1))[:, 0, 0]
    e = math.e
    np.testing.assert_allclose(got, [e / (e + 2), 1 / (e + 2), 1 / (e + 2)], atol=1e-12)
    np.testing.assert_allclose(got, [0.57612, 0.21194, 0.21194], atol=5e-6)


@settings(max_examples=50, deadline=None)
@given(arrays(float, (3, 2, 2), elements=st.floats(-30, 30)), st.floats(-100, 100))
def test_softmax_shift_invariant(a, c):
    np.testing.assert_allclose(softmax_map(a + c), softmax_map(a), atol=1e-9)
    np.testing.assert_allclose(softmax_map(a).sum(axis=0), 1.0, atol=1e-12)


def test_class_weights_example():
    omega, relabel = class_weights(counts_image([80, 15, 5]))
    np.testing.assert_allclose(omega, OMEGA, atol=1e-12)
    np.testing.assert_allclose(omega, [0.4167, 2.2222, 6.6667], atol=5e-5)
    assert relabel is None


def test_class_weights_uniform_and_scale_invariant():
    omega, _ = class_weights(counts_image([40, 30, 30]))
    big, _ = class_weights(np.kron(counts_image([40, 30, 30]), np.ones((2, 2), np.uint8)))
    np.testing.assert_allclose(big, omega)
    eq, _ = class_weights(np.arange(3).repeat(4).reshape(3, 4).astype(np.uint8))
    assert np.all(eq == eq[0])


def test_class_weights_relabel_when_unordered():
    omega, relabel = class_weights(counts_image([5, 80, 15]))
    assert np.all(np.diff(omega[np.argsort(relabel)]) >= 0)
    np.testing.assert_array_equal(relabel, [2, 0, 1])


def test_class_weights_absent_class_warns():
    with pytest.warns(RuntimeWarning, match="absent"):
        omega, _ = class_weights(np.zeros((4, 4), np.uint8))
    assert np.all(np.isfinite(omega))


def test_loss_perfect_prediction_is_zero():
    Y = counts_image([80, 15, 5])
    P = labels_to_probmap(Y)
    for mode in ("xent", "mwx"):
        assert weighted_xent(P, Y, WeightScheme(OMEGA, mode)) <= Y.size * 1e-12 * OMEGA.max()


def test_loss_single_pixel_half():
    P, Y = one_pixel([0.5, 0.5, 0.0], 0)
    got = weighted_xent(P, Y, WeightScheme([1.0, 1.0, 1.0]))
    assert abs(got - 0.693147) < 1e-6


def test_mwx_versus_xent_single_pixel():
    P, Y = one_pixel([0.2, 0.1, 0.7], 0)
    mwx = weighted_xent(P, Y, WeightScheme(OMEGA, "mwx"))
    xent = weighted_xent(P, Y, WeightScheme(OMEGA, "xent"))
    assert abs(mwx - OMEGA[2] * -math.log(0.2)) < 1e-12
    assert abs(xent - OMEGA[0] * -math.log(0.2)) < 1e-12
    assert abs(mwx - 10.7296) < 1e-4 and abs(xent - 0.67060) < 1e-5


def test_loss_clamps_zero_probability():
    P, Y = one_pixel([0.0, 1.0, 0.0], 0)
    assert weighted_xent(P, Y, WeightScheme([1, 1, 1])) == pytest.approx(-math.log(1e-12))


@settings(max_examples=60, deadline=None)
@given(arrays(float, (3, 5, 5), elements=st.floats(-5, 5)),
       arrays(np.uint8, (5, 5), elements=st.integers(0, 2)))
def test_mwx_dominates_xent(a, Y):
    P = softmax_map(a)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        omega, _ = class_weights(Y)
    mwx = weighted_xent(P, Y, WeightScheme(omega, "mwx"))
    xent = weighted_xent(P, Y, WeightScheme(omega, "xent"))
    assert mwx >= xent - 1e-9


def test_iou_examples():
    A, B = 0, 1
    r = iou(np.array([[A, B], [B, B]]), np.array([[A, A], [B, B]]), n_classes=2)
    assert abs(r.per_class[0] - 1 / 2) < 1e-12
    assert abs(r.per_class[1] - 2 / 3) < 1e-12
    assert abs(r.mean - 7 / 12) < 1e-12


def test_iou_identity_and_disjoint():
    Y = counts_image([80, 15, 5])
    r = iou(Y, Y)
    assert np.all(r.per_class == 1.0) and r.mean == 1.0
    a = np.zeros((2, 2), int)
    b = np.zeros((2, 2), int)
    a[0, 0], b[1, 1] = 1, 1
    assert iou(a, b).per_class[1] == 0.0


def test_iou_absent_class_is_nan_and_ignored():
    r = iou(np.zeros((3, 3), int), np.zeros((3, 3), int))
    assert math.isnan(r.per_class[2]) and r.mean == 1.0
    assert r.to_dict()["per_class"][2] is None


def test_all_background_prediction_hand_count():
    # 16x16 truth: a 10-px line row and a 2x2 corner block
    Y = np.zeros((16, 16), np.uint8)
    Y[8, 3:13] = 1
    Y[2:4, 2:4] = 2
    P = labels_to_probmap(np.zeros_like(Y))
    rep = metrics_report(P, Y)
    assert rep["iou"]["per_class"] == pytest.approx([(256 - 14) / 256, 0.0, 0.0])
    assert rep["iou"]["mean"] == pytest.approx((256 - 14) / 256 / 3)


def test_metrics_report_shape_mismatch():
    with pytest.raises(ValueError, match="shape mismatch"):
        metrics_report(labels_to_probmap(np.zeros((4, 4), int)), np.zeros((5, 4), int))


def test_probmap_file_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    P = softmax_map(rng.normal(size=(3, 7, 5)))
    header = write_probmap(tmp_path / "pm.json", P)
    assert (tmp_path / "pm.raw").stat().st_size == 4 * 3 * 7 * 5
    back = read_probmap(header)
    np.testing.assert_allclose(back, P, atol=1e-7)


def test_probmap_truncated_raw(tmp_path):
    header = write_probmap(tmp_path / "pm.json", labels_to_probmap(np.zeros((4, 4), int)))
    raw = tmp_path / "pm.raw"
    raw.write_bytes(raw.read_bytes()[:-4])
    with pytest.raises(ValueError, match="expected"):
        read_probmap(header)
