"""Small procedural line drawings for hermetic tests and demos."""
from __future__ import annotations

import math

import numpy as np

from .sketch import Sketch

KINDS = ("line", "cross", "triangle", "square", "star", "hatch", "zigzag", "house",
         "polygon", "scribble", "fan")


def _rot(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def fixture(kind: str) -> Sketch:
    """Canonical (unjittered) fixture in raw units, un-normalized."""
    return random_fixture(kind, rng=None)


def random_fixture(kind: str, rng: np.random.Generator | None = None) -> Sketch:
    """Fixture of the given kind; with ``rng`` it is rotated, stretched and jittered."""
    if kind not in KINDS:
        raise ValueError(f"unknown fixture kind {kind!r}; choose from {', '.join(KINDS)}")
    strokes = _BUILDERS[kind](rng)
    if rng is not None:
        R = _rot(rng.uniform(0, 2 * math.pi))
        stretch = np.diag([1.0, rng.uniform(0.7, 1.0)])
        M = R @ stretch
        strokes = [s @ M.T for s in strokes]
    return Sketch([np.asarray(s, dtype=float) for s in strokes], meta={"word": kind})


def _j(rng, scale: float = 4.0):
    return np.zeros(2) if rng is None else rng.uniform(-scale, scale, size=2)


def _line(rng):
    return [np.array([[0, 0], [100, 0]]) + np.array([[0, 0], _j(rng, 20)])]


def _cross(rng):
    a = np.array([[0, 0], [100, 100]], float) + np.array([_j(rng, 10), _j(rng, 10)])
    b = np.array([[0, 100], [100, 0]], float) + np.array([_j(rng, 10), _j(rng, 10)])
    return [a, b]


def _triangle(rng):
    pts = np.array([[0, 0], [100, 0], [50, 86.6]], float)
    pts = pts + np.array([_j(rng, 12) for _ in range(3)])
    return [pts[[0, 1]], pts[[1, 2]], pts[[2, 0]]]


def _square(rng):
    pts = np.array([[0, 0], [100, 0], [100, 100], [0, 100]], float)
    pts = pts + np.array([_j(rng, 6) for _ in range(4)])
    if rng is not None and rng.random() < 0.5:
        return [pts[[0, 1, 2, 3, 0]]]
    return [pts[[0, 1]], pts[[1, 2]], pts[[2, 3]], pts[[3, 0]]]


def _star(rng):
    ang = [math.pi / 2 + k * 4 * math.pi / 5 for k in range(6)]
    pts = np.array([[50 * math.cos(a), -50 * math.sin(a)] for a in ang])
    pts[:-1] += np.array([_j(rng, 3) for _ in range(5)])
    pts[-1] = pts[0]
    return [pts]


def _hatch(rng):
    n = 3 if rng is None else int(rng.integers(2, 4))
    m = 3 if rng is None else int(rng.integers(2, 4))
    strokes = []
    for k in range(n):
        y = (k + 0.5) * 100 / n
        strokes.append(np.array([[0, y], [100, y]]) + np.array([_j(rng, 2), _j(rng, 2)]))
    for k in range(m):
        x = (k + 0.5) * 100 / m
        strokes.append(np.array([[x, 0], [x, 100]]) + np.array([_j(rng, 2), _j(rng, 2)]))
    return strokes


def _zigzag(rng):
    k = 4 if rng is None else int(rng.integers(3, 6))
    pts = np.array([[i * 100 / k, 0 if i % 2 == 0 else 40] for i in range(k + 1)], float)
    pts = pts + np.array([_j(rng, 3) for _ in range(k + 1)])
    return [pts]


def _house(rng):
    body = np.array([[0, 100], [0, 40], [100, 40], [100, 100], [0, 100]], float)
    roof = np.array([[0, 40], [50, 0], [100, 40]], float)
    if rng is not None:
        body[1:4] += np.array([_j(rng, 3) for _ in range(3)])
        body[-1] = body[0]
        roof[0], roof[2] = body[1], body[2]
        roof[1] += _j(rng, 8)
    return [body, roof]


def _polygon(rng):
    k = 5 if rng is None else int(rng.integers(3, 8))
    ang = np.sort(np.linspace(0, 2 * math.pi, k, endpoint=False)
                  + (0 if rng is None else rng.uniform(-0.25, 0.25, k)))
    rad = 50 if rng is None else rng.uniform(30, 50, k)
    pts = np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
    return [np.vstack([pts, pts[:1]])]


def _scribble(rng):
    if rng is None:
        return [np.array([[0, 0], [60, 10], [20, 50], [90, 70], [40, 100]], float)]
    k = int(rng.integers(4, 8))
    pts = [np.zeros(2)]
    heading = rng.uniform(0, 2 * math.pi)
    for _ in range(k - 1):
        heading += rng.choice([-1, 1]) * rng.uniform(math.radians(40), math.radians(150))
        step = rng.uniform(30, 70)
        pts.append(pts[-1] + step * np.array([math.cos(heading), math.sin(heading)]))
    return [np.array(pts)]


def _fan(rng):
    k = 4 if rng is None else int(rng.integers(3, 6))
    spread = math.radians(150 if rng is None else rng.uniform(100, 200))
    ang = np.linspace(0, spread, k) + (0 if rng is None else rng.uniform(-0.1, 0.1, k))
    return [np.array([[0, 0], [80 * math.cos(a), 80 * math.sin(a)]]) for a in ang]


_BUILDERS = {
    "line": _line, "cross": _cross, "triangle": _triangle, "square": _square,
    "star": _star, "hatch": _hatch, "zigzag": _zigzag, "house": _house,
    "polygon": _polygon, "scribble": _scribble, "fan": _fan,
}


def fixture_set(n: int, seed: int = 0, kinds=KINDS) -> list[Sketch]:
    """``n`` jittered fixtures cycling through ``kinds``, reproducible from ``seed``."""
    rng = np.random.default_rng(seed)
    return [random_fixture(kinds[i % len(kinds)], rng) for i in range(n)]
