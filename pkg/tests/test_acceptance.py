"""End-to-end acceptance criteria 1-9.

Each test records a PASS/FAIL line that is printed in the pytest terminal
summary (and inline with ``-s``). Run just this file with::

    pytest tests/test_acceptance.py -v
"""
import math
import time
import warnings
from collections import Counter
from xml.etree import ElementTree as ET

import numpy as np
import pytest

from sketchbot.dataset import RasterParams, Sample, render_sample
from sketchbot.emit import ENGAGE, to_gcode, to_svg
from sketchbot.fixtures import fixture_set
from sketchbot.graph import FIXED_TAU_PRESETS, InterpParams, ThresholdMap, interpret, update_thresholds
from sketchbot.metrics import WeightScheme, class_weights, iou, softmax_map, weighted_xent
from sketchbot.study import edge_score, oracle_probmap, preset_sweep, threshold_study
from sketchbot.strokes import strokes_from_edges
from sketchbot.unet import NetSpec, apply_op, unet_shapes

pytestmark = pytest.mark.acceptance

# oracle set for criteria 1, 3 and 4: pen width varies per sample
ORACLE_N, ORACLE_SEED, ORACLE_WIDTHS = 150, 11, (2.0, 5.0)
# pool for criterion 2: uniform width-2 fixtures
RECOVERY_POOL, RECOVERY_SEED = 260, 21


def _render(sketches, params, seed):
    out = []
    for i, sk in enumerate(sketches):
        X, Y, g = render_sample(sk, params, params.width_for(i, seed))
        out.append(Sample(f"{i:06d}", "test", X, Y, g))
    return out


@pytest.fixture(scope="module")
def oracle_set():
    params = RasterParams(stroke_width_range=ORACLE_WIDTHS)
    return _render(fixture_set(ORACLE_N, ORACLE_SEED), params, ORACLE_SEED)


def test_criterion_1_oracle_round_trip(oracle_set, report):
    scores, elapsed = [], []
    for s in oracle_set:
        P = oracle_probmap(s.Y)
        t0 = time.perf_counter()
        g = interpret(s.X, P, InterpParams()).graph
        elapsed.append(time.perf_counter() - t0)
        scores.append(edge_score(g, s.graph, tol=2.0))
    tp = sum(sc.tp for sc in scores)
    precision = tp / sum(sc.n_pred for sc in scores)
    recall = tp / sum(sc.n_true for sc in scores)
    per_img = float(np.mean(elapsed))
    ok = len(oracle_set) >= 100 and precision >= 0.95 and recall >= 0.95 and per_img < 1.0
    assert report(1, ok, f"{len(oracle_set)} images, precision={precision:.4f} recall={recall:.4f} "
                         f"(>= 0.95), {per_img:.3f} s/image (< 1 s)")


def test_criterion_2_feedback_recovery(report):
    samples = _render(fixture_set(RECOVERY_POOL, RECOVERY_SEED), RasterParams(), RECOVERY_SEED)
    raised = InterpParams(tau0=0.6)
    qualifying = recovered = 0
    for s in samples:
        P = oracle_probmap(s.Y)
        before = edge_score(interpret(s.X, P, InterpParams(tau0=0.6, n_iters=0)).graph, s.graph)
        if before.tp == before.n_true:
            continue
        qualifying += 1
        after = edge_score(interpret(s.X, P, raised).graph, s.graph)
        recovered += after.tp == after.n_true
    rate = recovered / qualifying if qualifying else 0.0
    ok = qualifying >= 20 and rate >= 0.9
    assert report(2, ok, f"{qualifying} fixtures miss an edge at tau0=0.6 (>= 20); "
                         f"{recovered} fully recovered after 10 updates = {rate:.1%} (>= 90%)")


def test_criterion_3_separation(oracle_set, report):
    (study,) = threshold_study(oracle_set, [3.0], k=3, n_nonedge=50, seed=0)
    rate = study.separation_rate()
    peaks = study.n_peaks()
    ok = len(study.records) >= 100 and rate >= 0.9 and peaks == 1
    assert report(3, ok, f"beta=3 on {len(study.records)} images ({study.skipped} skipped): "
                         f"separated in {rate:.1%} (>= 90%), smoothed histogram peaks={peaks} (== 1)")


def test_criterion_4_fixed_tau_degradation(oracle_set, report):
    rows = preset_sweep(oracle_set, FIXED_TAU_PRESETS, InterpParams())
    adaptive = rows[-1]
    lower = [r for r in rows[:-1] if r.f1 < adaptive.f1]
    detail = ", ".join(f"({r.beta:g},{r.tau:g})={r.f1:.4f}" for r in rows[:-1])
    ok = len(lower) >= 3
    assert report(4, ok, f"adaptive F1={adaptive.f1:.4f}; presets {detail}; "
                         f"{len(lower)}/4 strictly lower (>= 3)")


def test_criterion_5_stroke_partition(report):
    rng = np.random.default_rng(5)
    failures = 0
    for _ in range(1000):
        n = int(rng.integers(1, 51))
        m = int(rng.integers(0, 201)) if n > 1 else 0
        u = rng.integers(0, n, m)
        v = (u + rng.integers(1, n, m)) % n if n > 1 else u
        edges = list(zip(u.tolist(), v.tolist()))
        strokes = strokes_from_edges(n, edges)
        got = Counter(tuple(sorted(p)) for s in strokes for p in zip(s[:-1], s[1:]))
        failures += got != Counter(tuple(sorted(e)) for e in edges)
    traces = {
        "path": (strokes_from_edges(3, [(0, 1), (1, 2)]), [[0, 1, 2]]),
        "cycle": (strokes_from_edges(3, [(0, 1), (1, 2), (2, 0)]), [[0, 1, 2, 0]]),
        "star": (strokes_from_edges(4, [(0, 1), (0, 2), (0, 3)]), [[0, 1], [0, 2], [0, 3]]),
    }
    bad = [k for k, (got, want) in traces.items() if repr(got) != repr(want)]
    ok = failures == 0 and not bad
    assert report(5, ok, f"1000 random multigraphs, {failures} partition mismatches; "
                         f"hand traces {'all match' if not bad else 'differ: ' + ', '.join(bad)}")


def test_criterion_6_loss_and_iou(report):
    omega = np.array([100 / 240, 100 / 45, 100 / 15])
    one = lambda p: np.asarray(p, float).reshape(3, 1, 1)  # noqa: E731
    lbl = np.array([[0]], np.uint8)
    checks = {
        "half": abs(weighted_xent(one([0.5, 0.5, 0]), lbl, WeightScheme([1, 1, 1])) - 0.693147),
        "mwx": abs(weighted_xent(one([0.2, 0.1, 0.7]), lbl, WeightScheme(omega, "mwx")) - 20 / 3 * -math.log(0.2)),
        "xent": abs(weighted_xent(one([0.2, 0.1, 0.7]), lbl, WeightScheme(omega, "xent")) - 5 / 12 * -math.log(0.2)),
    }
    r = iou(np.array([[0, 1], [1, 1]]), np.array([[0, 0], [1, 1]]), n_classes=2)
    checks["iou_A"] = abs(r.per_class[0] - 0.5)
    checks["iou_B"] = abs(r.per_class[1] - 2 / 3)
    checks["iou_mean"] = abs(r.mean - 7 / 12)
    w, _ = class_weights(np.repeat([0, 1, 2], [80, 15, 5]).reshape(10, 10))
    checks["omega"] = float(np.abs(w - omega).max())
    worst = max(checks.values())
    rng = np.random.default_rng(6)
    violations = 0
    samples = _render(fixture_set(30, 6), RasterParams(s=64), 6)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for s in samples:
            om, _ = class_weights(s.Y)
            P = softmax_map(rng.normal(0, 2, size=(3,) + s.Y.shape))
            violations += (weighted_xent(P, s.Y, WeightScheme(om, "mwx"))
                           < weighted_xent(P, s.Y, WeightScheme(om, "xent")))
    ok = worst <= 1e-6 and violations == 0
    assert report(6, ok, f"max deviation from hand values {worst:.2e} (<= 1e-6); "
                         f"mwx < xent on {violations}/{len(samples)} random fixtures")


def test_criterion_7_emitters(report):
    golden = ["G00 Z-5", "X25.00 Y89.00", "G01 Z0", "X89.00 Y25.00", "G00 Z-5"]
    golden_ok = to_gcode([[(0, 0), (256, 256)]], 256) == golden
    rng = np.random.default_rng(7)
    pairing_bad = svg_bad = 0
    for _ in range(1000):
        strokes = [rng.uniform(0, 256, size=(int(rng.integers(2, 8)), 2))
                   for _ in range(int(rng.integers(0, 10)))]
        lines = to_gcode(strokes, 256)
        down, engages, good = False, 0, lines[0] == "G00 Z-5"
        for line in lines[1:]:
            if line == ENGAGE:
                good &= not down
                down, engages = True, engages + 1
            elif line.startswith("G00 Z"):
                good &= down
                down = False
        pairing_bad += not (good and not down and engages == len(strokes))
        root = ET.fromstring(to_svg(strokes, 256))
        svg_bad += len(root.findall("{http://www.w3.org/2000/svg}path")) != len(strokes)
    ok = golden_ok and pairing_bad == 0 and svg_bad == 0
    assert report(7, ok, f"golden program {'matches' if golden_ok else 'differs'}; "
                         f"1000 random stroke sets: {pairing_bad} pairing and {svg_bad} SVG failures")


def test_criterion_8_update_arithmetic(report):
    worst = 0.0
    for tau0 in (0.05, 0.35, 0.6, 0.95):
        for lam in (0.01, 0.05, 0.2):
            for delta in (-1, 0, 1):
                tau = ThresholdMap(tau0)
                for m in range(1, 21):
                    tau = update_thresholds(tau, {(0, 1): delta}, lam)
                    worst = max(worst, abs(tau[(0, 1)] - tau0 * (1 + lam * delta) ** m))
    assert report(8, worst <= 1e-12, f"max |tau_m - tau0(1+lambda*delta)^m| over m <= 20: {worst:.1e} (<= 1e-12)")


def test_criterion_9_unet_shapes(report):
    rng = np.random.default_rng(9)
    bad = 0
    for _ in range(100):
        spec = NetSpec(int(rng.choice([1, 3, 5, 7])), int(rng.choice([1, 3, 5])),
                       int(rng.integers(1, 5)), int(rng.integers(1, 4)))
        n = int(rng.integers(8, 513))
        for mode in ("mirror", "shrink"):
            rep = unet_shapes(spec, n, mode)
            size = n
            for st in rep.stages:
                bad += st.size_in != size
                size = apply_op(st.op, size)
            bad += size != rep.output_size
    ident_bad = 0
    for d in range(1, 5):
        for r in range(1, 4):
            for m in range(1, 9):
                n = m * 2 ** d
                for mode in ("mirror", "shrink"):
                    rep = unet_shapes(NetSpec(1, 1, d, r), n, mode)
                    ident_bad += not (rep.feasible and rep.output_size == n)
    ok = bad == 0 and ident_bad == 0
    assert report(9, ok, f"100 random specs x 2 modes: {bad} composition mismatches; "
                         f"(1,1,d,r) size-preservation failures: {ident_bad}")
