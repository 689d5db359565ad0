"""Graph-level evaluation and the plausibility-threshold studies."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .graph import (FIXED_TAU_PRESETS, InterpParams, StrokeGraph, candidate_pairs, interpret,
                    score_pairs, vertices_from_masks)
from .raster import LINES, labels_to_probmap


def match_vertices(pred, truth, tol: float = 2.0) -> dict[int, int]:
    """One-to-one pred -> truth vertex matching minimising total distance within ``tol``."""
    pred = np.asarray(pred, dtype=float).reshape(-1, 2)
    truth = np.asarray(truth, dtype=float).reshape(-1, 2)
    if len(pred) == 0 or len(truth) == 0:
        return {}
    D = cdist(pred, truth)
    cost = np.where(D <= tol, D, 1e6)
    rows, cols = linear_sum_assignment(cost)
    return {int(r): int(c) for r, c in zip(rows, cols) if D[r, c] <= tol}


@dataclass
class EdgeScore:
    tp: int
    n_pred: int
    n_true: int

    @property
    def precision(self) -> float:
        return self.tp / self.n_pred if self.n_pred else 1.0

    @property
    def recall(self) -> float:
        return self.tp / self.n_true if self.n_true else 1.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0


def true_pairs(pred_vertices, truth: dict, tol: float = 2.0) -> set[tuple[int, int]]:
    """Pred-vertex pairs that map onto ground-truth edges."""
    m = match_vertices(pred_vertices, truth["vertices"], tol)
    inv = {t: p for p, t in m.items()}
    out = set()
    for a, b in truth["edges"]:
        if a in inv and b in inv:
            i, j = inv[a], inv[b]
            out.add((min(i, j), max(i, j)))
    return out


def edge_score(graph: StrokeGraph, truth: dict, tol: float = 2.0) -> EdgeScore:
    good = true_pairs(graph.vertices, truth, tol)
    tp = sum(1 for e in graph.edges if e in good)
    return EdgeScore(tp, len(graph.edges), len(truth["edges"]))


def oracle_probmap(Y) -> np.ndarray:
    return labels_to_probmap(Y)


def interpret_sample(sample, params: InterpParams):
    return interpret(sample.X, oracle_probmap(sample.Y), params)


# -- threshold study ----------------------------------------------------------

def approx_threshold(scores: Sequence[float], n_true: int, k: int = 3) -> float:
    """Score at the true-edge cut, averaged over a ``k``-wide rank window.

    Scores are sorted descending. With ``E = n_true`` the window covers the
    1-based ranks ``E - k//2 .. E + k//2`` (``E-1, E, E+1`` for ``k = 3``),
    clipped to the ranks that exist.
    """
    s = np.sort(np.asarray(scores, dtype=float))[::-1]
    if len(s) == 0:
        raise ValueError("no scores")
    half = k // 2
    centre = n_true - 1  # 0-based index of rank E
    lo, hi = max(centre - half, 0), min(centre + half, len(s) - 1)
    if lo > hi:
        lo = hi = min(max(centre, 0), len(s) - 1)
    return float(s[lo:hi + 1].mean())


def smooth(counts, k: int = 3) -> np.ndarray:
    counts = np.asarray(counts, dtype=float)
    if k <= 1 or len(counts) == 0:
        return counts
    return np.convolve(np.pad(counts, k // 2, mode="edge"), np.ones(k) / k, mode="valid")


def count_peaks(values) -> int:
    """Number of local maxima, treating plateaus as a single peak."""
    v = np.asarray(values, dtype=float)
    if len(v) == 0:
        return 0
    keep = np.concatenate([[True], np.diff(v) != 0])
    v = v[keep]
    if len(v) == 1:
        return 1
    left = np.concatenate([[-np.inf], v[:-1]])
    right = np.concatenate([v[1:], [-np.inf]])
    return int(np.sum((v > left) & (v > right)))


@dataclass
class StudyRecord:
    id: str
    n_vertices: int
    n_true: int
    tau_hat: float
    eta_mean: float
    min_true: float
    max_nonedge: float

    @property
    def gap(self) -> float:
        return self.tau_hat - self.eta_mean

    @property
    def separated(self) -> bool:
        return self.min_true > self.max_nonedge


@dataclass
class BetaStudy:
    beta: float
    records: list[StudyRecord] = field(default_factory=list)
    skipped: int = 0
    bins: int = 20
    smoothing: int = 3

    def tau_hats(self) -> np.ndarray:
        return np.array([r.tau_hat for r in self.records])

    def gaps(self) -> np.ndarray:
        return np.array([r.gap for r in self.records])

    def histogram(self):
        return np.histogram(self.tau_hats(), bins=self.bins, range=(0.0, 1.0))

    def gap_histogram(self):
        return np.histogram(self.gaps(), bins=self.bins, range=(-1.0, 1.0))

    def n_peaks(self) -> int:
        counts, _ = self.histogram()
        return count_peaks(smooth(counts, self.smoothing))

    def separation_rate(self) -> float:
        if not self.records:
            return 0.0
        return float(np.mean([r.separated for r in self.records]))

    def summary(self) -> dict:
        th, gaps = self.tau_hats(), self.gaps()
        counts, edges = self.histogram()
        return {
            "beta": self.beta,
            "images": len(self.records),
            "skipped": self.skipped,
            "tau_hat_mean": float(th.mean()) if len(th) else None,
            "tau_hat_std": float(th.std()) if len(th) else None,
            "gap_mean": float(gaps.mean()) if len(gaps) else None,
            "separation_rate": self.separation_rate(),
            "histogram": {"counts": counts.tolist(), "edges": edges.tolist()},
            "smoothed_peaks": self.n_peaks(),
        }


def threshold_study(samples, betas: Sequence[float], k: int = 3,
                    params: Optional[InterpParams] = None, n_nonedge: int = 50,
                    seed: int = 0, tol: float = 2.0, bins: int = 20) -> list[BetaStudy]:
    """Per image and mask width, the score cut that recovers the known edge count.

    ``samples`` yields objects with ``id``, ``Y`` (oracle labels) and ``graph``
    (ground-truth sidecar dict).
    """
    params = params or InterpParams()
    rng = np.random.default_rng(seed)
    studies = [BetaStudy(float(b), bins=bins, smoothing=k) for b in betas]
    for sample in samples:
        P = oracle_probmap(sample.Y)
        V = vertices_from_masks(P, params)
        n_true = len(sample.graph["edges"])
        if len(V) < 2 or n_true == 0:
            for st in studies:
                st.skipped += 1
            continue
        pairs = candidate_pairs(V, params.block_radius, params.max_edge_length)
        good = true_pairs(V, sample.graph, tol)
        nonedges = [p for p in pairs if p not in good]
        if not nonedges:
            # every candidate is an edge: there is no cut to estimate
            for st in studies:
                st.skipped += 1
            continue
        if len(nonedges) > n_nonedge:
            pick = rng.choice(len(nonedges), n_nonedge, replace=False)
            nonedges = [nonedges[i] for i in sorted(pick)]
        for st in studies:
            eta = score_pairs(P[LINES], V, pairs, st.beta, params.corner_radius)
            scores = list(eta.values())
            t_scores = [eta[p] for p in pairs if p in good]
            n_scores = [eta[p] for p in nonedges]
            st.records.append(StudyRecord(
                sample.id, len(V), n_true,
                approx_threshold(scores, n_true, k),
                float(np.mean(scores)) if scores else 0.0,
                min(t_scores) if t_scores else 0.0,
                max(n_scores) if n_scores else 0.0,
            ))
    return studies


@dataclass
class SweepRow:
    name: str
    beta: float
    tau: float
    adaptive: bool
    scores: list[EdgeScore]

    def _mean(self, attr) -> float:
        return float(np.mean([getattr(s, attr) for s in self.scores])) if self.scores else 0.0

    @property
    def precision(self) -> float:
        return self._mean("precision")

    @property
    def recall(self) -> float:
        return self._mean("recall")

    @property
    def f1(self) -> float:
        return self._mean("f1")

    def to_dict(self) -> dict:
        return {"name": self.name, "beta": self.beta, "tau": self.tau, "adaptive": self.adaptive,
                "precision": self.precision, "recall": self.recall, "f1": self.f1,
                "images": len(self.scores)}


def preset_sweep(samples, presets=FIXED_TAU_PRESETS, params: Optional[InterpParams] = None,
                 tol: float = 2.0) -> list[SweepRow]:
    """Mean edge precision / recall / F1 for each fixed (beta, tau) and the adaptive loop."""
    params = params or InterpParams()
    configs = [(f"fixed(beta={b:g},tau={t:g})", replace(params, beta=float(b), tau0=float(t), n_iters=0), False)
               for b, t in presets]
    configs.append((f"adaptive(beta={params.beta:g},tau0={params.tau0:g},N={params.n_iters})", params, True))
    rows = [SweepRow(name, p.beta, p.tau0, adaptive, []) for name, p, adaptive in configs]
    for sample in samples:
        P = oracle_probmap(sample.Y)
        for row, (_, p, _) in zip(rows, configs):
            row.scores.append(edge_score(interpret(sample.X, P, p).graph, sample.graph, tol))
    return rows
