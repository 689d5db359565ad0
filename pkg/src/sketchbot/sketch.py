"""Vector sketch model, Quick-draw ingestion and segment geometry."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

PARALLEL_EPS = 1e-12


class SketchError(ValueError):
    pass


class ParseError(SketchError):
    def __init__(self, message: str, record: int):
        super().__init__(f"record {record}: {message}")
        self.record = record


@dataclass
class Sketch:
    """An ordered list of polyline strokes.

    Each stroke is an ``(n, 2)`` float array of ``(x, y)`` points, ``n >= 2``,
    with no two consecutive points equal. ``canvas_size`` is 0 until the sketch
    has been normalized onto an ``s x s`` canvas.
    """

    strokes: list[np.ndarray]
    canvas_size: int = 0
    skipped_strokes: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.strokes = [np.asarray(s, dtype=float).reshape(-1, 2) for s in self.strokes]

    @property
    def n_points(self) -> int:
        return sum(len(s) for s in self.strokes)

    def points(self) -> np.ndarray:
        if not self.strokes:
            return np.empty((0, 2))
        return np.concatenate(self.strokes)

    def bbox(self) -> tuple[float, float, float, float]:
        pts = self.points()
        if len(pts) == 0:
            raise SketchError("empty sketch has no bounding box")
        (x0, y0), (x1, y1) = pts.min(axis=0), pts.max(axis=0)
        return float(x0), float(y0), float(x1), float(y1)

    def segments(self) -> np.ndarray:
        """All stroke segments as an ``(m, 2, 2)`` array."""
        segs = [np.stack([s[:-1], s[1:]], axis=1) for s in self.strokes]
        if not segs:
            return np.empty((0, 2, 2))
        return np.concatenate(segs)

    def to_dict(self) -> dict:
        return {
            "canvas_size": int(self.canvas_size),
            "strokes": [[[float(x), float(y)] for x, y in s] for s in self.strokes],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Sketch":
        return cls([np.asarray(s, dtype=float) for s in data["strokes"]],
                   canvas_size=int(data.get("canvas_size", 0)))

    def __eq__(self, other):
        if not isinstance(other, Sketch):
            return NotImplemented
        return (self.canvas_size == other.canvas_size
                and len(self.strokes) == len(other.strokes)
                and all(np.array_equal(a, b) for a, b in zip(self.strokes, other.strokes)))


def dumps_sketch(sketch: Sketch) -> str:
    return json.dumps(sketch.to_dict())


def loads_sketch(text: str) -> Sketch:
    return Sketch.from_dict(json.loads(text))


def _clean_stroke(points: np.ndarray) -> Optional[np.ndarray]:
    if len(points) == 0:
        return None
    keep = np.ones(len(points), dtype=bool)
    keep[1:] = np.any(points[1:] != points[:-1], axis=1)
    points = points[keep]
    return points if len(points) >= 2 else None


def _drawing_to_sketch(drawing, index: int) -> Sketch:
    if not isinstance(drawing, list) or not drawing:
        raise ParseError("drawing must be a nonempty list of [x-list, y-list] pairs", index)
    strokes, skipped = [], 0
    for stroke in drawing:
        if not (isinstance(stroke, list) and len(stroke) >= 2):
            raise ParseError("stroke must be an [x-list, y-list] pair", index)
        xs, ys = stroke[0], stroke[1]
        if len(xs) != len(ys):
            raise ParseError("x and y lists differ in length", index)
        try:
            pts = np.column_stack([np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)])
        except (TypeError, ValueError) as exc:
            raise ParseError(f"non-numeric coordinate ({exc})", index) from None
        if not np.all(np.isfinite(pts)):
            raise ParseError("non-finite coordinate", index)
        cleaned = _clean_stroke(pts)
        if cleaned is None:
            skipped += 1
        else:
            strokes.append(cleaned)
    return Sketch(strokes, skipped_strokes=skipped)


def _record_to_sketch(record, index: int) -> Sketch:
    if isinstance(record, dict):
        if "drawing" not in record:
            raise ParseError("missing 'drawing' field", index)
        sketch = _drawing_to_sketch(record["drawing"], index)
        sketch.meta = {k: v for k, v in record.items() if k != "drawing"}
        return sketch
    return _drawing_to_sketch(record, index)


def parse_stroke_file(data: bytes | str, format: str = "ndjson_simplified") -> list[Sketch]:
    """Parse Quick-draw simplified NDJSON or an equivalent plain JSON array.

    Raw coordinates are kept; strokes with fewer than two distinct points are
    dropped and counted in ``Sketch.skipped_strokes``.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"invalid UTF-8 ({exc})", 0) from None
    if format == "ndjson_simplified":
        records = []
        for i, line in enumerate(l for l in data.splitlines() if l.strip()):
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", i) from None
    elif format == "plain_json":
        if not data.strip():
            return []
        try:
            records = json.loads(data)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON ({exc.msg})", 0) from None
        if not isinstance(records, list):
            raise ParseError("top level must be an array", 0)
    else:
        raise ValueError(f"unknown stroke file format {format!r}")
    return [_record_to_sketch(r, i) for i, r in enumerate(records)]


def serialize_ndjson(sketches: Iterable[Sketch]) -> str:
    """Write sketches back out as simplified NDJSON (``drawing`` field only)."""
    lines = []
    for sk in sketches:
        drawing = [[s[:, 0].tolist(), s[:, 1].tolist()] for s in sk.strokes]
        lines.append(json.dumps({**sk.meta, "drawing": drawing}))
    return "".join(line + "\n" for line in lines)


def canvas_margin(stroke_width: float, corner_radius: float) -> float:
    return math.ceil(stroke_width) + corner_radius


def normalize(sketch: Sketch, s: int = 256, stroke_width: float = 2.0,
              corner_radius: float = 3.0) -> Sketch:
    """Fit the sketch, centred and aspect-preserving, inside an ``s x s`` canvas.

    The tight bounding box is scaled uniformly so its longer side spans
    ``s - 2*margin`` and translated so its centre sits at ``(s/2, s/2)``.
    """
    if s < 32:
        raise SketchError(f"canvas size must be >= 32, got {s}")
    if not sketch.strokes:
        raise SketchError("cannot normalize an empty sketch")
    margin = canvas_margin(stroke_width, corner_radius)
    x0, y0, x1, y1 = sketch.bbox()
    extent = max(x1 - x0, y1 - y0)
    if extent <= 0:
        raise SketchError("zero-extent sketch")
    scale = (s - 2 * margin) / extent
    centre = np.array([(x0 + x1) / 2, (y0 + y1) / 2])
    strokes = [(st - centre) * scale + s / 2 for st in sketch.strokes]
    return Sketch(strokes, canvas_size=s, skipped_strokes=sketch.skipped_strokes,
                  meta=dict(sketch.meta))


def segment_intersection(s1: Sequence, s2: Sequence) -> Optional[tuple[float, float]]:
    """Unique intersection point of two closed segments, or None.

    Parallel pairs (including collinear overlaps) yield None.
    """
    (ax, ay), (bx, by) = s1
    (cx, cy), (dx, dy) = s2
    rx, ry = bx - ax, by - ay
    qx, qy = dx - cx, dy - cy
    det = rx * qy - ry * qx
    if abs(det) < PARALLEL_EPS:
        return None
    wx, wy = cx - ax, cy - ay
    t = (wx * qy - wy * qx) / det
    u = (wx * ry - wy * rx) / det
    if not (0.0 <= t <= 1.0 and 0.0 <= u <= 1.0):
        return None
    # average both parametrisations so the result is symmetric in (s1, s2)
    px = 0.5 * ((ax + t * rx) + (cx + u * qx))
    py = 0.5 * ((ay + t * ry) + (cy + u * qy))
    return (px, py)


def segment_intersections(segs: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised all-pairs intersection over an ``(m, 2, 2)`` segment array.

    Pairs sharing an endpoint are skipped. Returns ``(pairs, t, points)`` where
    ``pairs`` is ``(k, 2)`` segment indices ``i < j``, ``t`` is ``(k, 2)`` the
    parameter along each segment and ``points`` is ``(k, 2)``.
    """
    m = len(segs)
    if m < 2:
        return np.empty((0, 2), int), np.empty((0, 2)), np.empty((0, 2))
    i, j = np.triu_indices(m, k=1)
    a, b = segs[i, 0], segs[i, 1]
    c, d = segs[j, 0], segs[j, 1]
    shared = np.zeros(len(i), dtype=bool)
    for p in (a, b):
        for q in (c, d):
            shared |= np.all(p == q, axis=1)
    r, q = b - a, d - c
    w = c - a
    det = r[:, 0] * q[:, 1] - r[:, 1] * q[:, 0]
    ok = (np.abs(det) >= PARALLEL_EPS) & ~shared
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (w[:, 0] * q[:, 1] - w[:, 1] * q[:, 0]) / det
        u = (w[:, 0] * r[:, 1] - w[:, 1] * r[:, 0]) / det
    ok &= (t >= 0) & (t <= 1) & (u >= 0) & (u <= 1)
    t, u = t[ok], u[ok]
    pts = 0.5 * ((a[ok] + t[:, None] * r[ok]) + (c[ok] + u[:, None] * q[ok]))
    return np.stack([i[ok], j[ok]], axis=1), np.stack([t, u], axis=1), pts
