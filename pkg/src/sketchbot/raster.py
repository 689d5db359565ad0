"""Rasterisation and 3-class ground-truth synthesis (background / lines / corners)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components as _cc
from scipy.spatial import cKDTree

from .sketch import Sketch, SketchError, segment_intersections

BACKGROUND, LINES, CORNERS = 0, 1, 2
N_CLASSES = 3


def bresenham(x0: int, y0: int, x1: int, y1: int) -> list[tuple[int, int]]:
    """Integer pixel run between two pixel centres, endpoints included."""
    points = []
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    while True:
        points.append((x0, y0))
        if x0 == x1 and y0 == y1:
            return points
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def _round(v: float) -> int:
    return int(np.floor(v + 0.5))


def draw_segment(mask: np.ndarray, a, b, width: float) -> None:
    """Burn one segment into a boolean ``(h, w)`` mask in place.

    Pixel centres sit at integer coordinates. The Bresenham run is always drawn;
    for ``width > 1`` every pixel whose centre lies within ``width / 2`` of the
    segment is added too.
    """
    h, w = mask.shape
    for x, y in bresenham(_round(a[0]), _round(a[1]), _round(b[0]), _round(b[1])):
        if 0 <= x < w and 0 <= y < h:
            mask[y, x] = True
    if width <= 1:
        return
    half = width / 2.0
    x_lo = max(int(np.floor(min(a[0], b[0]) - half)), 0)
    x_hi = min(int(np.ceil(max(a[0], b[0]) + half)), w - 1)
    y_lo = max(int(np.floor(min(a[1], b[1]) - half)), 0)
    y_hi = min(int(np.ceil(max(a[1], b[1]) + half)), h - 1)
    if x_lo > x_hi or y_lo > y_hi:
        return
    ys, xs = np.mgrid[y_lo:y_hi + 1, x_lo:x_hi + 1]
    d = point_segment_distance(xs, ys, a, b)
    mask[y_lo:y_hi + 1, x_lo:x_hi + 1] |= d <= half + 1e-9


def point_segment_distance(xs, ys, a, b) -> np.ndarray:
    ax, ay = float(a[0]), float(a[1])
    vx, vy = float(b[0]) - ax, float(b[1]) - ay
    L2 = vx * vx + vy * vy
    px, py = xs - ax, ys - ay
    if L2 == 0:
        return np.hypot(px, py)
    t = np.clip((px * vx + py * vy) / L2, 0.0, 1.0)
    return np.hypot(px - t * vx, py - t * vy)


def draw_polylines(shape: tuple[int, int], polylines, width: float) -> np.ndarray:
    mask = np.zeros(shape, dtype=bool)
    for line in polylines:
        line = np.asarray(line, dtype=float)
        for a, b in zip(line[:-1], line[1:]):
            draw_segment(mask, a, b, width)
    return mask


def _require_canvas(sketch: Sketch) -> int:
    if sketch.canvas_size <= 0:
        raise SketchError("sketch is not normalized (canvas_size unset)")
    return sketch.canvas_size


def rasterize(sketch: Sketch, stroke_width: float = 2.0) -> np.ndarray:
    """Binary grayscale rendering of a normalized sketch: 1.0 ink, 0.0 background."""
    s = _require_canvas(sketch)
    return draw_polylines((s, s), sketch.strokes, stroke_width).astype(np.float64)


def disc_mask(shape: tuple[int, int], centres, radius: float) -> np.ndarray:
    h, w = shape
    mask = np.zeros(shape, dtype=bool)
    r = int(np.ceil(radius))
    for cx, cy in np.asarray(centres, dtype=float).reshape(-1, 2):
        x0, x1 = max(int(np.floor(cx)) - r, 0), min(int(np.ceil(cx)) + r, w - 1)
        y0, y1 = max(int(np.floor(cy)) - r, 0), min(int(np.ceil(cy)) + r, h - 1)
        if x0 > x1 or y0 > y1:
            continue
        ys, xs = np.mgrid[y0:y1 + 1, x0:x1 + 1]
        mask[y0:y1 + 1, x0:x1 + 1] |= (xs - cx) ** 2 + (ys - cy) ** 2 <= radius * radius + 1e-9
    return mask


@dataclass
class CornerSet:
    points: np.ndarray
    corner_radius: float

    def __len__(self):
        return len(self.points)


def default_merge_radius(corner_radius: float) -> float:
    # two discs closer than this touch under 8-connectivity and label as one blob
    return 2.0 * corner_radius + 2.0


def _corner_structure(sketch: Sketch, merge_radius: float):
    """Raw corner candidates, their merged clusters and per-segment corner events."""
    segs = sketch.segments()
    seg_owner = []
    raw = []
    events: list[list[tuple[float, int]]] = []
    for si, st in enumerate(sketch.strokes):
        for k in range(len(st) - 1):
            seg_owner.append(si)
            events.append([])
    # polyline vertices
    seg_idx = 0
    for st in sketch.strokes:
        for k, p in enumerate(st):
            rid = len(raw)
            raw.append(p)
            if k > 0:
                events[seg_idx + k - 1].append((1.0, rid))
            if k < len(st) - 1:
                events[seg_idx + k].append((0.0, rid))
        seg_idx += len(st) - 1
    pairs, ts, pts = segment_intersections(segs)
    for (i, j), (t, u), p in zip(pairs, ts, pts):
        rid = len(raw)
        raw.append(p)
        events[i].append((float(t), rid))
        events[j].append((float(u), rid))
    raw = np.asarray(raw, dtype=float).reshape(-1, 2)
    n = len(raw)
    if n == 0:
        return raw, np.empty(0, int), events
    close = np.array(sorted(cKDTree(raw).query_pairs(merge_radius)), dtype=int).reshape(-1, 2)
    adj = coo_matrix((np.ones(len(close)), (close[:, 0], close[:, 1])), shape=(n, n))
    _, labels = _cc(adj, directed=False)
    # relabel by first appearance so vertex order follows stroke order
    order = {}
    for lab in labels:
        order.setdefault(lab, len(order))
    cluster = np.array([order[lab] for lab in labels], dtype=int)
    return raw, cluster, events


def _cluster_means(raw: np.ndarray, cluster: np.ndarray) -> np.ndarray:
    if len(raw) == 0:
        return np.empty((0, 2))
    k = cluster.max() + 1
    sums = np.zeros((k, 2))
    np.add.at(sums, cluster, raw)
    return sums / np.bincount(cluster, minlength=k)[:, None]


def collect_corners(sketch: Sketch, corner_radius: float = 3.0,
                    merge_radius: float | None = None) -> CornerSet:
    """Polyline vertices plus pairwise segment intersections, merged by proximity."""
    if merge_radius is None:
        merge_radius = default_merge_radius(corner_radius)
    raw, cluster, _ = _corner_structure(sketch, merge_radius)
    return CornerSet(_cluster_means(raw, cluster), corner_radius)


def ground_truth_graph(sketch: Sketch, corner_radius: float = 3.0,
                       merge_radius: float | None = None) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Vertices (merged corners) and edges between consecutive corners along strokes."""
    if merge_radius is None:
        merge_radius = default_merge_radius(corner_radius)
    raw, cluster, events = _corner_structure(sketch, merge_radius)
    edges = set()
    for ev in events:
        ev.sort()
        chain = [cluster[rid] for _, rid in ev]
        for u, v in zip(chain[:-1], chain[1:]):
            if u != v:
                edges.add((min(u, v), max(u, v)))
    return _cluster_means(raw, cluster), sorted((int(u), int(v)) for u, v in edges)


def make_labels(sketch: Sketch, stroke_width: float = 2.0, corner_radius: float = 3.0,
                merge_radius: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Return the input image ``X`` and its label image ``Y``.

    Corners are corner-radius discs clipped to the ink, lines are the remaining
    ink and everything else is background.
    """
    X = rasterize(sketch, stroke_width)
    ink = X > 0
    corners = collect_corners(sketch, corner_radius, merge_radius)
    corner_px = disc_mask(X.shape, corners.points, corner_radius) & ink
    Y = np.zeros(X.shape, dtype=np.uint8)
    Y[ink] = LINES
    Y[corner_px] = CORNERS
    return X, Y


def labels_to_probmap(Y: np.ndarray, n_classes: int = N_CLASSES) -> np.ndarray:
    """One-hot ``(K, H, W)`` probability map from a label image."""
    Y = np.asarray(Y)
    return (np.arange(n_classes)[:, None, None] == Y[None]).astype(np.float64)
