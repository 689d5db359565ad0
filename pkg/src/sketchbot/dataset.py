"""On-disk training/test sets: input PNG, label PNG and ground-truth graph per sample."""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from PIL import Image

from .raster import default_merge_radius, ground_truth_graph, make_labels
from .sketch import Sketch, normalize


@dataclass
class RasterParams:
    """Canvas and pen settings for dataset synthesis.

    With ``stroke_width_range = (lo, hi)`` each sample gets its own pen width,
    drawn uniformly from that range by a generator seeded with the dataset seed
    and the sample index; ``stroke_width`` is then ignored.
    """

    s: int = 256
    stroke_width: float = 2.0
    corner_radius: float = 3.0
    merge_radius: Optional[float] = None
    stroke_width_range: Optional[tuple[float, float]] = None

    @property
    def merge(self) -> float:
        return self.merge_radius if self.merge_radius is not None else default_merge_radius(self.corner_radius)

    def width_for(self, index: int, seed: int) -> float:
        if self.stroke_width_range is None:
            return self.stroke_width
        lo, hi = self.stroke_width_range
        return round(float(np.random.default_rng([seed, index]).uniform(lo, hi)), 3)


def write_gray_png(path, X) -> None:
    arr = np.clip(np.rint(np.asarray(X) * 255), 0, 255).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(path, format="PNG")


def read_gray_png(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.float64) / 255.0


def write_label_png(path, Y) -> None:
    Image.fromarray(np.asarray(Y, dtype=np.uint8), mode="L").save(path, format="PNG")


def read_label_png(path) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode not in ("L", "P"):
            raise ValueError(f"{path}: label image must be single-channel, got mode {im.mode}")
        return np.asarray(im, dtype=np.uint8)


def split_indices(n: int, train_fraction: float, seed: int) -> tuple[list[int], list[int]]:
    """Seeded shuffle; the first ``floor(n * f)`` indices train, the rest test."""
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = math.floor(n * train_fraction)
    return sorted(perm[:n_train].tolist()), sorted(perm[n_train:].tolist())


def render_sample(sketch: Sketch, params: RasterParams, stroke_width: Optional[float] = None):
    """Normalize one sketch and synthesize ``(X, Y, graph_json)`` for it."""
    width = params.stroke_width if stroke_width is None else stroke_width
    sk = normalize(sketch, params.s, width, params.corner_radius)
    X, Y = make_labels(sk, width, params.corner_radius, params.merge)
    V, E = ground_truth_graph(sk, params.corner_radius, params.merge)
    return X, Y, {"vertices": V.tolist(), "edges": [list(e) for e in E]}


def write_sample(out: Path, sample_id: str, X, Y, graph: dict) -> dict:
    files = {
        "input": f"{sample_id}.input.png",
        "labels": f"{sample_id}.labels.png",
        "graph": f"{sample_id}.graph.json",
    }
    write_gray_png(out / files["input"], X)
    write_label_png(out / files["labels"], Y)
    (out / files["graph"]).write_text(json.dumps(graph), encoding="utf-8")
    return files


def generate_dataset(source: Sequence[Sketch], out_dir, params: Optional[RasterParams] = None,
                     train_fraction: float = 0.8, seed: int = 0,
                     ids: Optional[Sequence[str]] = None, n_jobs: int = 1) -> Path:
    """Write the dataset under ``out_dir`` and return the manifest path.

    Output is a pure function of ``(source, params, train_fraction, seed)``; the
    manifest lists samples by index regardless of worker completion order.
    """
    params = params or RasterParams()
    if not source:
        raise ValueError("empty dataset requested")
    ids = list(ids) if ids is not None else [f"{i:06d}" for i in range(len(source))]
    if len(ids) != len(source):
        raise ValueError("ids and source differ in length")
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate sample ids")
    train, _ = split_indices(len(source), train_fraction, seed)
    train = set(train)
    out_dir = Path(out_dir)
    for split in ("train", "test"):
        (out_dir / split).mkdir(parents=True, exist_ok=True)
    if not os.access(out_dir, os.W_OK):
        raise PermissionError(f"{out_dir} is not writable")

    def job(i):
        split = "train" if i in train else "test"
        width = params.width_for(i, seed)
        X, Y, g = render_sample(source[i], params, width)
        files = write_sample(out_dir / split, ids[i], X, Y, g)
        return {"id": ids[i], "split": split,
                **{k: f"{split}/{v}" for k, v in files.items()},
                "stroke_width": width,
                "n_vertices": len(g["vertices"]), "n_edges": len(g["edges"])}

    if n_jobs == 1:
        samples = [job(i) for i in range(len(source))]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as ex:
            samples = list(ex.map(job, range(len(source))))
    manifest = {
        "params": {**asdict(params), "merge_radius": params.merge},
        "seed": seed,
        "train_fraction": train_fraction,
        "counts": {"train": len(train), "test": len(source) - len(train)},
        "samples": samples,
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    return path


@dataclass
class Sample:
    id: str
    split: str
    X: np.ndarray
    Y: np.ndarray
    graph: dict


def load_manifest(path) -> dict:
    path = Path(path)
    manifest = json.loads(path.read_text(encoding="utf-8"))
    manifest["root"] = str(path.parent)
    return manifest


def iter_samples(manifest: dict, split: Optional[str] = None):
    root = Path(manifest["root"])
    for rec in manifest["samples"]:
        if split is not None and rec["split"] != split:
            continue
        yield Sample(
            rec["id"], rec["split"],
            read_gray_png(root / rec["input"]),
            read_label_png(root / rec["labels"]),
            json.loads((root / rec["graph"]).read_text(encoding="utf-8")),
        )
