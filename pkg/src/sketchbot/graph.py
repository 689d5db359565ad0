"""Stroke-graph interpretation from segmentation masks.

Vertices are centroids of connected blobs in the corners channel. A candidate
edge between two vertices is scored by the mean lines-channel response over a
narrow band around the segment joining them and accepted when the score beats
a per-pair threshold. Thresholds are refined by rendering the current graph,
diffing it against the input image and nudging pairs that fall inside missing
(down) or spurious (up) blobs.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional

import numpy as np
from scipy import ndimage

from ._validation import check_binary_image, check_gray_image, check_probmap, check_same_shape
from .raster import CORNERS, LINES, draw_polylines

log = logging.getLogger(__name__)

Pair = tuple[int, int]


@dataclass
class Component:
    pixel_count: int
    centroid: tuple[float, float]  # (x, y)
    bbox: tuple[int, int, int, int]  # min_x, min_y, max_x, max_y, inclusive


_STRUCTURES = {
    4: ndimage.generate_binary_structure(2, 1),
    8: ndimage.generate_binary_structure(2, 2),
}


def connected_components(binary, connectivity: int = 8, min_area: int = 1) -> list[Component]:
    """Maximal connected regions of a binary image, sorted by (min_y, min_x)."""
    binary = check_binary_image(binary)
    if connectivity not in _STRUCTURES:
        raise ValueError("connectivity must be 4 or 8")
    labels, n = ndimage.label(binary, structure=_STRUCTURES[connectivity])
    if n == 0:
        return []
    ys, xs = np.nonzero(labels)
    lab = labels[ys, xs] - 1
    counts = np.bincount(lab, minlength=n)
    cx = np.bincount(lab, weights=xs, minlength=n) / counts
    cy = np.bincount(lab, weights=ys, minlength=n) / counts
    out = []
    for i, sl in enumerate(ndimage.find_objects(labels)):
        if counts[i] < min_area:
            continue
        bbox = (sl[1].start, sl[0].start, sl[1].stop - 1, sl[0].stop - 1)
        out.append(Component(int(counts[i]), (float(cx[i]), float(cy[i])), bbox))
    out.sort(key=lambda c: (c.bbox[1], c.bbox[0]))
    return out


@dataclass
class InterpParams:
    """Knobs for graph interpretation; defaults are the reference settings.

    ``block_radius`` drops pairs whose joining segment passes within that many
    pixels of a third vertex (the path through that vertex is preferred).
    ``bbox_pad`` is the padding, in pixels, applied to blob bounding boxes when
    testing whether a vertex pair lies inside one; None means
    ``beta + dilate_px + stroke_width``.
    """

    beta: float = 1.8
    tau0: float = 0.35
    update_rate: float = 0.05
    n_iters: int = 10
    binarize_threshold: float = 0.5
    min_blob_area: int = 4
    dilate_px: int = 2
    connectivity: int = 8
    stroke_width: float = 2.0
    corner_radius: float = 3.0
    block_radius: Optional[float] = 2.0
    bbox_pad: Optional[float] = None
    max_edge_length: Optional[float] = None

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if not 0 < self.tau0 < 1:
            raise ValueError("tau0 must lie in (0, 1)")
        if not 0 <= self.update_rate < 1:
            raise ValueError("update_rate must lie in [0, 1)")
        if self.n_iters < 0:
            raise ValueError("n_iters must be >= 0")

    @property
    def pad(self) -> float:
        if self.bbox_pad is not None:
            return self.bbox_pad
        return self.beta + self.dilate_px + self.stroke_width

    def to_dict(self) -> dict:
        return asdict(self)


# (beta, tau) pairs used for the fixed-threshold comparison
FIXED_TAU_PRESETS: list[tuple[float, float]] = [(2, 0.3), (3, 0.22), (5, 0.2), (7, 0.15)]


class ThresholdMap:
    """Per-pair thresholds, stored lazily as overrides of a default value."""

    def __init__(self, default: float, overrides: Optional[dict] = None):
        if default <= 0:
            raise ValueError("thresholds must be positive")
        self.default = float(default)
        self._tau: dict[Pair, float] = dict(overrides or {})

    @staticmethod
    def key(i: int, j: int) -> Pair:
        if i == j:
            raise ValueError("self-pair has no threshold")
        return (i, j) if i < j else (j, i)

    def __getitem__(self, pair: Pair) -> float:
        return self._tau.get(self.key(*pair), self.default)

    def __setitem__(self, pair: Pair, value: float) -> None:
        self._tau[self.key(*pair)] = float(value)

    def overrides(self) -> dict[Pair, float]:
        return dict(self._tau)

    def copy(self) -> "ThresholdMap":
        return ThresholdMap(self.default, self._tau)


@dataclass
class StrokeGraph:
    vertices: np.ndarray  # (n, 2) of (x, y)
    edges: list[Pair] = field(default_factory=list)
    tau: Optional[ThresholdMap] = None
    eta: dict[Pair, float] = field(default_factory=dict)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 2)
        self.edges = sorted({ThresholdMap.key(int(i), int(j)) for i, j in self.edges})
        n = len(self.vertices)
        for i, j in self.edges:
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i}, {j}) references a missing vertex")

    def to_json(self) -> dict:
        return {"vertices": self.vertices.tolist(), "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_json(cls, data: dict) -> "StrokeGraph":
        return cls(np.asarray(data["vertices"], dtype=float), [tuple(e) for e in data["edges"]])


def vertices_from_masks(P, params: Optional[InterpParams] = None) -> np.ndarray:
    """Centroids of corner-channel blobs, as an ``(n, 2)`` array of (x, y)."""
    params = params or InterpParams()
    P = check_probmap(P)
    comps = connected_components(P[CORNERS] >= params.binarize_threshold,
                                 params.connectivity, params.min_blob_area)
    return np.array([c.centroid for c in comps], dtype=float).reshape(-1, 2)


def _band_pixels(p, q, beta: float, shape: tuple[int, int]):
    """Integer pixel centres within ``beta/2`` of segment pq and inside its extent."""
    h, w = shape
    (px, py), (qx, qy) = p, q
    vx, vy = qx - px, qy - py
    L = math.hypot(vx, vy)
    half = beta / 2.0
    if L * L == 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    if abs(vx) >= abs(vy):
        major = np.arange(math.ceil(min(px, qx) - half), math.floor(max(px, qx) + half) + 1)
        slope = vy / vx
        centre = py + (major - px) * slope
        reach = half * L / abs(vx)
        offs = np.arange(-math.ceil(reach) - 1, math.ceil(reach) + 2)
        xs = np.repeat(major, len(offs))
        ys = (np.floor(centre)[:, None] + offs[None, :]).ravel()
    else:
        major = np.arange(math.ceil(min(py, qy) - half), math.floor(max(py, qy) + half) + 1)
        slope = vx / vy
        centre = px + (major - py) * slope
        reach = half * L / abs(vy)
        offs = np.arange(-math.ceil(reach) - 1, math.ceil(reach) + 2)
        ys = np.repeat(major, len(offs))
        xs = (np.floor(centre)[:, None] + offs[None, :]).ravel()
    xs = xs.astype(np.int64)
    ys = ys.astype(np.int64)
    dx, dy = xs - px, ys - py
    t = (dx * vx + dy * vy) / (L * L)
    perp = np.abs(dx * vy - dy * vx) / L
    keep = (t >= 0) & (t <= 1) & (perp <= half) & (xs >= 0) & (xs < w) & (ys >= 0) & (ys < h)
    return xs[keep], ys[keep]


def roi_mask(shape: tuple[int, int], p, q, beta: float, exclude_radius: float = 0.0):
    """Pixel coordinates ``(xs, ys)`` of the scoring region between p and q."""
    p, q = tuple(map(float, p)), tuple(map(float, q))
    if p == q:
        raise ValueError("degenerate pair: p == q")
    # canonical endpoint order makes the region bit-identical for (p, q) and (q, p)
    if q < p:
        p, q = q, p
    xs, ys = _band_pixels(p, q, beta, shape)
    if exclude_radius > 0 and len(xs):
        r2 = exclude_radius * exclude_radius
        near = ((xs - p[0]) ** 2 + (ys - p[1]) ** 2 <= r2) | ((xs - q[0]) ** 2 + (ys - q[1]) ** 2 <= r2)
        xs, ys = xs[~near], ys[~near]
    return xs, ys


def plausibility(Y_lines, p, q, beta: float, exclude_radius: float = 0.0) -> float:
    """Mean lines response over a width-``beta`` band centred on segment pq.

    Pixels within ``exclude_radius`` of either endpoint are left out (they
    belong to the corner blobs). An empty region scores 0.
    """
    Y_lines = np.asarray(Y_lines, dtype=np.float64)
    xs, ys = roi_mask(Y_lines.shape, p, q, beta, exclude_radius)
    if len(xs) == 0:
        return 0.0
    return float(Y_lines[ys, xs].sum() / len(xs))


def candidate_pairs(vertices, block_radius: Optional[float] = None,
                    max_edge_length: Optional[float] = None) -> list[Pair]:
    """All vertex pairs, minus those passing through a third vertex or too long."""
    V = np.asarray(vertices, dtype=float).reshape(-1, 2)
    n = len(V)
    pairs = []
    for i, j in itertools.combinations(range(n), 2):
        d = V[j] - V[i]
        L = math.hypot(*d)
        if L == 0:
            continue
        if max_edge_length is not None and L > max_edge_length:
            continue
        if block_radius is not None and n > 2:
            rel = V - V[i]
            t = (rel @ d) / (L * L)
            perp = np.abs(rel[:, 0] * d[1] - rel[:, 1] * d[0]) / L
            between = (t > 0) & (t < 1) & (perp <= block_radius)
            between[[i, j]] = False
            if between.any():
                continue
        pairs.append((i, j))
    return pairs


def score_pairs(Y_lines, vertices, pairs: Iterable[Pair], beta: float,
                exclude_radius: float = 0.0) -> dict[Pair, float]:
    V = np.asarray(vertices, dtype=float)
    Y_lines = np.asarray(Y_lines, dtype=np.float64)
    return {(i, j): plausibility(Y_lines, V[i], V[j], beta, exclude_radius) for i, j in pairs}


def propose_edges(vertices, Y_lines, tau: ThresholdMap | float, beta: float,
                  exclude_radius: float = 0.0, eta: Optional[dict[Pair, float]] = None,
                  pairs: Optional[list[Pair]] = None) -> tuple[list[Pair], dict[Pair, float]]:
    """Edges ``(i, j)`` whose plausibility strictly exceeds their threshold.

    ``eta`` is a score cache that is filled in and returned; ``pairs`` restricts
    the candidates (all pairs by default).
    """
    if not isinstance(tau, ThresholdMap):
        tau = _ConstTau(float(tau))
    n = len(vertices)
    if pairs is None:
        pairs = list(itertools.combinations(range(n), 2))
    eta = {} if eta is None else eta
    missing = [p for p in pairs if p not in eta]
    if missing:
        eta.update(score_pairs(Y_lines, vertices, missing, beta, exclude_radius))
    edges = [p for p in pairs if eta[p] > tau[p]]
    return edges, eta


class _ConstTau:
    # a uniform threshold that, unlike ThresholdMap, may be <= 0
    def __init__(self, value: float):
        self.value = value

    def __getitem__(self, pair):
        return self.value


def render_graph(graph: StrokeGraph, s: int | tuple[int, int], stroke_width: float = 2.0) -> np.ndarray:
    """Binary image of the graph's edges as straight segments between vertices."""
    shape = (s, s) if isinstance(s, int) else tuple(s)
    lines = [graph.vertices[[i, j]] for i, j in graph.edges]
    return draw_polylines(shape, lines, stroke_width).astype(np.float64)


def blob_diff(input_X, rendered, params: Optional[InterpParams] = None
              ) -> tuple[list[Component], list[Component]]:
    """Blobs present in the input but not rendered (absent) and vice versa."""
    params = params or InterpParams()
    input_X = check_gray_image(input_X, "input image")
    rendered = check_gray_image(rendered, "rendered image")
    check_same_shape(input_X.shape, rendered.shape, "input image", "rendered image")
    ink = input_X >= params.binarize_threshold
    drawn = rendered >= params.binarize_threshold
    st = _STRUCTURES[8]
    if params.dilate_px > 0:
        ink_d = ndimage.binary_dilation(ink, st, iterations=params.dilate_px)
        drawn_d = ndimage.binary_dilation(drawn, st, iterations=params.dilate_px)
    else:
        ink_d, drawn_d = ink, drawn
    absent = connected_components(ink & ~drawn_d, params.connectivity, params.min_blob_area)
    superfluous = connected_components(drawn & ~ink_d, params.connectivity, params.min_blob_area)
    return absent, superfluous


def _pairs_inside(vertices: np.ndarray, blobs: list[Component], pad: float) -> set[Pair]:
    inside = set()
    for b in blobs:
        x0, y0, x1, y1 = b.bbox
        m = ((vertices[:, 0] >= x0 - pad) & (vertices[:, 0] <= x1 + pad)
             & (vertices[:, 1] >= y0 - pad) & (vertices[:, 1] <= y1 + pad))
        idx = np.flatnonzero(m).tolist()
        inside.update(itertools.combinations(idx, 2))
    return inside


def threshold_deltas(vertices, absent: list[Component], superfluous: list[Component],
                     pad: float) -> dict[Pair, int]:
    """Nonzero per-pair deltas: -1 inside an absent blob box, +1 inside a superfluous one."""
    V = np.asarray(vertices, dtype=float).reshape(-1, 2)
    down = _pairs_inside(V, absent, pad)
    up = _pairs_inside(V, superfluous, pad) - down
    return {**{p: -1 for p in down}, **{p: 1 for p in up}}


def update_thresholds(tau: ThresholdMap, deltas: dict[Pair, int], update_rate: float) -> ThresholdMap:
    """Multiplicative update ``tau <- tau * (1 + rate * delta)`` on the given pairs."""
    if not 0 <= update_rate < 1:
        raise ValueError("update_rate must lie in [0, 1)")
    new = tau.copy()
    for pair, delta in deltas.items():
        if delta:
            new[pair] = tau[pair] * (1.0 + update_rate * delta)
    return new


@dataclass
class Interpretation:
    graph: StrokeGraph
    diagnostics: list[dict]
    warnings: list[str] = field(default_factory=list)

    def diagnostics_json(self) -> dict:
        return {"iterations": self.diagnostics, "warnings": self.warnings}


def interpret(input_X, P, params: Optional[InterpParams] = None) -> Interpretation:
    """Run the full vertex / edge / feedback loop on one image."""
    params = params or InterpParams()
    input_X = check_gray_image(input_X, "input image")
    P = check_probmap(P)
    check_same_shape(input_X.shape, P.shape[1:], "input image", "probability map")
    V = vertices_from_masks(P, params)
    tau = ThresholdMap(params.tau0)
    if len(V) == 0:
        log.warning("no corner blobs found; returning an empty graph")
        return Interpretation(StrokeGraph(V, [], tau, {}), [], ["no vertices found"])
    Y_lines = P[LINES]
    pairs = candidate_pairs(V, params.block_radius, params.max_edge_length)
    eta: dict[Pair, float] = {}

    def propose():
        edges, _ = propose_edges(V, Y_lines, tau, params.beta, params.corner_radius, eta, pairs)
        return edges

    diagnostics = []
    for it in range(params.n_iters):
        edges = propose()
        graph = StrokeGraph(V, edges)
        rendered = render_graph(graph, input_X.shape, params.stroke_width)
        absent, superfluous = blob_diff(input_X, rendered, params)
        deltas = threshold_deltas(V, absent, superfluous, params.pad)
        tau = update_thresholds(tau, deltas, params.update_rate)
        diagnostics.append(_diag(it, edges, absent, superfluous, tau, pairs))
    edges = propose()
    return Interpretation(StrokeGraph(V, edges, tau, eta), diagnostics)


def _diag(it, edges, absent, superfluous, tau: ThresholdMap, pairs) -> dict:
    taus = np.array([tau[p] for p in pairs]) if pairs else np.array([tau.default])
    return {
        "iteration": it,
        "edges": len(edges),
        "absent": len(absent),
        "superfluous": len(superfluous),
        "tau_min": float(taus.min()),
        "tau_mean": float(taus.mean()),
        "tau_max": float(taus.max()),
    }
