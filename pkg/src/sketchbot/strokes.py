"""Partition a graph's edges into pen strokes by greedy edge-popping walks."""
from __future__ import annotations

import bisect
from typing import Iterable, Sequence

import numpy as np


class GraphError(ValueError):
    pass


class AdjacencyList:
    """Undirected multigraph as sorted per-vertex neighbour lists.

    ``pop_edge(u, w)`` removes one copy of the edge from both endpoint lists.
    """

    def __init__(self, n_vertices: int, edges: Iterable[tuple[int, int]] = ()):
        self.adj: list[list[int]] = [[] for _ in range(n_vertices)]
        for u, v in edges:
            self.add_edge(u, v)

    @classmethod
    def from_lists(cls, lists: Sequence[Sequence[int]]) -> "AdjacencyList":
        """Build from raw neighbour lists, rejecting asymmetric input."""
        A = cls(len(lists))
        A.adj = [sorted(int(w) for w in nbrs) for nbrs in lists]
        for u, nbrs in enumerate(A.adj):
            if u in nbrs:
                raise GraphError(f"self-loop at vertex {u}")
            for w in set(nbrs):
                if not 0 <= w < len(lists):
                    raise GraphError(f"vertex {u} lists missing neighbour {w}")
                if A.adj[w].count(u) != nbrs.count(w):
                    raise GraphError("graph not undirected")
        return A

    def __len__(self):
        return len(self.adj)

    def add_edge(self, u: int, v: int) -> None:
        if u == v:
            raise GraphError(f"self-loop at vertex {u}")
        bisect.insort(self.adj[u], v)
        bisect.insort(self.adj[v], u)

    def pop_edge(self, u: int, w: int) -> None:
        self.adj[u].remove(w)
        self.adj[w].remove(u)

    def get_vertex(self, u: int) -> int:
        """Lowest-index remaining neighbour of ``u``."""
        return self.adj[u][0]

    def first_active(self) -> int | None:
        for v, nbrs in enumerate(self.adj):
            if nbrs:
                return v
        return None

    def n_edges(self) -> int:
        return sum(len(n) for n in self.adj) // 2


def get_sequence(A: AdjacencyList, u: int, stroke: list[int]) -> list[int]:
    """Extend ``stroke`` from ``u`` until the current vertex has no edges left.

    Written as a loop: each step is the tail call of the recursive form.
    """
    while A.adj[u]:
        w = A.get_vertex(u)
        A.pop_edge(u, w)
        stroke.append(w)
        u = w
    return stroke


def strokes_gen(A: AdjacencyList) -> list[list[int]]:
    """Consume every edge of ``A``, returning strokes as vertex-index lists.

    Each stroke starts at the lowest-index vertex that still has edges. ``A`` is
    emptied in the process.
    """
    strokes = []
    while (v := A.first_active()) is not None:
        u = A.get_vertex(v)
        A.pop_edge(v, u)
        strokes.append(get_sequence(A, u, [v, u]))
    return strokes


def strokes_from_edges(n_vertices: int, edges: Iterable[tuple[int, int]]) -> list[list[int]]:
    return strokes_gen(AdjacencyList(n_vertices, edges))


def strokes_to_points(strokes: Sequence[Sequence[int]], vertices) -> list[np.ndarray]:
    V = np.asarray(vertices, dtype=float).reshape(-1, 2)
    out = []
    for k, stroke in enumerate(strokes):
        idx = np.asarray(stroke, dtype=int)
        if len(idx) and (idx.min() < 0 or idx.max() >= len(V)):
            raise IndexError(f"stroke {k} references a vertex outside 0..{len(V) - 1}")
        out.append(V[idx])
    return out
