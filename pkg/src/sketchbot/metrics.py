"""Segmentation evaluation: softmax, class weighting, weighted cross-entropy, IoU."""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from ._validation import check_label_image, check_probmap, check_same_shape

PROB_CLAMP = 1e-12


def softmax_map(activations) -> np.ndarray:
    """Per-pixel softmax over the class axis of a ``(K, H, W)`` activation grid."""
    a = np.asarray(activations, dtype=np.float64)
    if a.ndim != 3:
        raise ValueError(f"expected (K, H, W) activations, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("activations must be finite")
    e = np.exp(a - a.max(axis=0, keepdims=True))
    return e / e.sum(axis=0, keepdims=True)


@dataclass
class WeightScheme:
    """Per-class weights ``omega`` and the loss variant (``"xent"`` or ``"mwx"``).

    In ``mwx`` mode the weight of a pixel is taken at whichever of its true and
    predicted labels ranks higher when classes are ordered by non-decreasing
    weight, i.e. ``max(omega[true], omega[pred])``.
    """

    omega: np.ndarray
    mode: str = "xent"

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=np.float64)
        if self.mode not in ("xent", "mwx"):
            raise ValueError(f"unknown weight mode {self.mode!r}")
        if np.any(self.omega <= 0):
            raise ValueError("class weights must be positive")

    @property
    def rank(self) -> np.ndarray:
        """Position of each class id in the non-decreasing-weight ordering."""
        order = np.argsort(self.omega, kind="stable")
        rank = np.empty_like(order)
        rank[order] = np.arange(len(order))
        return rank


def class_weights(Y, n_classes: int = 3, floor: int = 1) -> tuple[np.ndarray, Optional[np.ndarray]]:
    """Inverse-frequency weights ``omega_c = N / (K * count_c)``.

    Returns ``(omega, relabel)``. ``relabel[c]`` is the id class ``c`` would take
    so that weights are non-decreasing in id; it is None when ids are already
    ordered. Absent classes are counted as ``floor`` pixels.
    """
    Y = check_label_image(Y, n_classes)
    counts = np.bincount(Y.ravel(), minlength=n_classes).astype(np.float64)
    if np.any(counts == 0):
        missing = np.flatnonzero(counts == 0).tolist()
        warnings.warn(f"classes {missing} absent; using a frequency floor of {floor} px",
                      RuntimeWarning, stacklevel=2)
        counts = np.maximum(counts, floor)
    omega = Y.size / (n_classes * counts)
    relabel = None
    if np.any(np.diff(omega) < 0):
        relabel = WeightScheme(omega).rank
    return omega, relabel


def pixel_weights(P, Y, scheme: WeightScheme) -> np.ndarray:
    P = check_probmap(P)
    Y = check_label_image(Y, P.shape[0])
    if scheme.mode == "xent":
        return scheme.omega[Y]
    rho = P.argmax(axis=0)
    rank = scheme.rank
    chosen = np.where(rank[Y] >= rank[rho], Y, rho)
    return scheme.omega[chosen]


def weighted_xent(P, Y, scheme: WeightScheme) -> float:
    """Weighted negative log-likelihood ``-sum_x w(x) log p_true(x)``.

    Summation is over the C-contiguous (row-major) pixel array, so the result
    does not depend on how the caller tiled the work.
    """
    P = check_probmap(P)
    Y = check_label_image(Y, P.shape[0])
    check_same_shape(P.shape[1:], Y.shape, "probability map", "label image")
    w = pixel_weights(P, Y, scheme)
    p_true = np.take_along_axis(P, Y[None].astype(np.intp), axis=0)[0]
    terms = -w * np.log(np.maximum(p_true, PROB_CLAMP))
    return float(np.ascontiguousarray(terms).sum())


@dataclass
class IoUResult:
    per_class: np.ndarray  # nan where a class is absent from both images
    mean: float

    def to_dict(self) -> dict:
        return {"per_class": [None if np.isnan(v) else float(v) for v in self.per_class],
                "mean": self.mean}


def iou(pred, truth, n_classes: int = 3) -> IoUResult:
    pred = check_label_image(pred, n_classes)
    truth = check_label_image(truth, n_classes)
    check_same_shape(pred.shape, truth.shape, "prediction", "truth")
    per_class = np.full(n_classes, np.nan)
    for c in range(n_classes):
        p, t = pred == c, truth == c
        union = np.count_nonzero(p | t)
        if union:
            per_class[c] = np.count_nonzero(p & t) / union
    present = per_class[~np.isnan(per_class)]
    mean = float(present.mean()) if len(present) else float("nan")
    return IoUResult(per_class, mean)


def metrics_report(P, Y_true, n_classes: int = 3) -> dict:
    """IoU of ``argmax(P)`` against ``Y_true`` and both loss variants."""
    P = check_probmap(P)
    Y_true = check_label_image(Y_true, n_classes)
    check_same_shape(P.shape[1:], Y_true.shape, "prediction", "truth")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        omega, _ = class_weights(Y_true, n_classes)
    pred = P.argmax(axis=0).astype(np.uint8)
    return {
        "iou": iou(pred, Y_true, n_classes).to_dict(),
        "loss": {
            "xent": weighted_xent(P, Y_true, WeightScheme(omega, "xent")),
            "mwx": weighted_xent(P, Y_true, WeightScheme(omega, "mwx")),
        },
    }


# -- probability-map interchange: K-plane float32 little-endian + JSON header --

def write_probmap(header_path, P) -> Path:
    P = check_probmap(P)
    header_path = Path(header_path)
    raw_path = header_path.with_suffix(".raw")
    k, h, w = P.shape
    raw_path.write_bytes(np.ascontiguousarray(P, dtype="<f4").tobytes())
    header = {"k": k, "h": h, "w": w, "order": "khw", "data": raw_path.name}
    header_path.write_text(json.dumps(header), encoding="utf-8")
    return header_path


def read_probmap(header_path) -> np.ndarray:
    header_path = Path(header_path)
    header = json.loads(header_path.read_text(encoding="utf-8"))
    if header.get("order", "khw") != "khw":
        raise ValueError(f"unsupported plane order {header['order']!r}")
    k, h, w = int(header["k"]), int(header["h"]), int(header["w"])
    raw_path = header_path.parent / header.get("data", header_path.with_suffix(".raw").name)
    buf = raw_path.read_bytes()
    if len(buf) != 4 * k * h * w:
        raise ValueError(f"{raw_path}: expected {4 * k * h * w} bytes, found {len(buf)}")
    return np.frombuffer(buf, dtype="<f4").reshape(k, h, w).astype(np.float64)
