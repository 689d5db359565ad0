"""``sketchbot`` command line: dataset, vectorize, eval, study, fixture.

Exit status is 0 on success, 2 on bad usage or unusable input and 1 on an
unexpected internal failure. Error messages start with the failing stage.
"""
from __future__ import annotations

import csv
import json
import sys
from contextlib import contextmanager
from pathlib import Path

import click
import numpy as np

from . import __version__
from .config import ConfigError, PipelineConfig, resolve_config
from .dataset import (generate_dataset, iter_samples, load_manifest, read_gray_png, read_label_png,
                      render_sample, write_sample)
from .emit import gcode_text, to_gcode, to_svg
from .fixtures import KINDS, fixture_set
from .graph import FIXED_TAU_PRESETS, interpret
from .metrics import metrics_report, read_probmap
from .raster import N_CLASSES, labels_to_probmap
from .sketch import SketchError, parse_stroke_file, serialize_ndjson
from .strokes import GraphError, strokes_from_edges, strokes_to_points
from .study import preset_sweep, threshold_study

EXIT_INPUT = 2
EXIT_INTERNAL = 1

_INPUT_ERRORS = (ConfigError, SketchError, GraphError, ValueError, OSError, KeyError,
                 json.JSONDecodeError)


class StageError(Exception):
    def __init__(self, stage: str, message: str, code: int):
        super().__init__(f"{stage}: {message}")
        self.code = code


@contextmanager
def stage(name: str):
    """Re-raise failures inside the block as :class:`StageError` tagged with ``name``."""
    try:
        yield
    except StageError:
        raise
    except FileNotFoundError as exc:
        raise StageError(name, f"file not found: {exc.filename}", EXIT_INPUT) from exc
    except PermissionError as exc:
        raise StageError(name, f"permission denied: {exc.filename}", EXIT_INPUT) from exc
    except _INPUT_ERRORS as exc:
        raise StageError(name, str(exc) or type(exc).__name__, EXIT_INPUT) from exc
    except Exception as exc:  # noqa: BLE001 - anything else is a bug
        raise StageError(name, f"internal error: {type(exc).__name__}: {exc}", EXIT_INTERNAL) from exc


def _fail(exc: StageError):
    click.echo(f"error: {exc}", err=True)
    sys.exit(exc.code)


def _warn(msg: str):
    click.echo(f"warning: {msg}", err=True)


# -- options mirroring PipelineConfig fields ----------------------------------

def _opt(name: str, **kw):
    return click.option("--" + name.replace("_", "-"), name, default=None, **kw)


_FIELD_OPTS = {
    "s": dict(type=int, help="Canvas side in pixels."),
    "stroke_width": dict(type=float, help="Pen width in pixels."),
    "corner_radius": dict(type=float, help="Corner disc radius in pixels."),
    "merge_radius": dict(type=float, help="Corner merge distance (default 2r+2)."),
    "stroke_width_range": dict(type=(float, float), help="Per-sample pen width drawn from [LO, HI]."),
    "beta": dict(type=float, help="Mask width for edge plausibility."),
    "tau0": dict(type=float, help="Initial plausibility threshold."),
    "update_rate": dict(type=float, help="Threshold update rate."),
    "n_iters": dict(type=int, help="Feedback iterations."),
    "binarize_threshold": dict(type=float),
    "min_blob_area": dict(type=int),
    "dilate_px": dict(type=int),
    "connectivity": dict(type=click.Choice(["4", "8"]), help="Blob connectivity."),
    "block_radius": dict(type=float),
    "bbox_pad": dict(type=float, help="Blob bbox padding (default beta+dilate+width)."),
    "max_edge_length": dict(type=float),
    "box_size_mm": dict(type=float),
    "origin_mm": dict(type=(float, float)),
    "safe_z_mm": dict(type=float),
    "unit_scale": dict(type=float, help="Millimetres to machine units factor."),
    "seed": dict(type=int),
    "train_fraction": dict(type=float),
    "count": dict(type=int),
    "format": dict(type=click.Choice(["ndjson_simplified", "plain_json"])),
    "smoothing": dict(type=int, help="Histogram moving-average window."),
    "split": dict(type=click.Choice(["train", "test"])),
    "match_tol": dict(type=float, help="Vertex matching tolerance in pixels."),
    "n_jobs": dict(type=int),
    "source": dict(type=str, help="Stroke file (ndjson or plain JSON)."),
    "input": dict(type=str, help="Input image PNG."),
    "labels": dict(type=str, help="Oracle label PNG."),
    "probmap": dict(type=str, help="Probability map header JSON."),
    "pred": dict(type=str, help="Prediction: probability map header or label PNG."),
    "truth": dict(type=str, help="Ground-truth label PNG."),
    "manifest": dict(type=str, help="Dataset manifest.json."),
    "out": dict(type=str, help="Output directory."),
}

RASTER = ("s", "stroke_width", "corner_radius", "merge_radius", "stroke_width_range")
INTERP = ("beta", "tau0", "update_rate", "n_iters", "binarize_threshold", "min_blob_area",
          "dilate_px", "connectivity", "stroke_width", "corner_radius", "block_radius", "bbox_pad",
          "max_edge_length")
FRAME = ("box_size_mm", "origin_mm", "safe_z_mm", "unit_scale")


def config_options(*names):
    def deco(f):
        seen = []
        for n in names:
            if n not in seen:
                seen.append(n)
        for n in reversed(seen):
            f = _opt(n, **_FIELD_OPTS[n])(f)
        return click.option("--config", "config_path", type=str, default=None,
                            help="JSON config file; flags override it.")(f)
    return deco


def _parse_betas(ctx, param, value):
    if value is None:
        return None
    try:
        return tuple(float(v) for v in value.split(",") if v.strip())
    except ValueError:
        raise click.BadParameter("expected comma-separated numbers, e.g. 3,5,7")


def _config(stage_name: str, config_path, kw) -> PipelineConfig:
    if kw.get("connectivity") is not None:
        kw["connectivity"] = int(kw["connectivity"])
    with stage(stage_name + "/config"):
        return resolve_config(config_path, kw)


def _out_dir(cfg: PipelineConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


@click.group()
@click.version_option(__version__, prog_name="sketchbot")
def main():
    """Turn line-drawing rasters into pen strokes and plotter programs."""


# -- dataset --------------------------------------------------------------------

@main.command()
@config_options("source", "format", "count", "seed", "train_fraction", "n_jobs", "out", *RASTER)
def dataset(config_path, **kw):
    """Render a stroke file into train/test images, labels and graphs."""
    try:
        cfg = _config("dataset", config_path, kw)
        with stage("dataset/read"):
            if cfg.source is None:
                raise ConfigError("--source is required")
            path = Path(cfg.source)
            if not path.is_file():
                raise FileNotFoundError(2, "no such file", str(path))
            sketches = parse_stroke_file(path.read_bytes(), cfg.format)
            if cfg.count is not None:
                sketches = sketches[:cfg.count]
        with stage("dataset/render"):
            manifest = generate_dataset(sketches, cfg.out, cfg.raster_params(),
                                        cfg.train_fraction, cfg.seed, n_jobs=cfg.n_jobs)
            cfg.dump(Path(cfg.out) / "config.json")
    except StageError as exc:
        _fail(exc)
    click.echo(str(manifest))


# -- vectorize ------------------------------------------------------------------

def _load_vectorize_inputs(cfg: PipelineConfig):
    if cfg.input is None:
        raise ConfigError("--input is required")
    if (cfg.labels is None) == (cfg.probmap is None):
        raise ConfigError("give exactly one of --labels or --probmap")
    X = read_gray_png(cfg.input)
    if cfg.labels is not None:
        Y = read_label_png(cfg.labels)
        if Y.max(initial=0) >= N_CLASSES:
            raise ValueError(f"{cfg.labels}: label ids must be < {N_CLASSES}")
        P = labels_to_probmap(Y)
    else:
        P = read_probmap(cfg.probmap)
    if X.shape != P.shape[1:]:
        raise ValueError(f"input image is {X.shape[1]}x{X.shape[0]} but the class map is "
                         f"{P.shape[2]}x{P.shape[1]}")
    return X, P


@main.command()
@config_options("input", "labels", "probmap", "out", *INTERP, *FRAME)
def vectorize(config_path, **kw):
    """Interpret one image as a stroke graph and emit strokes, G-code and SVG."""
    try:
        cfg = _config("vectorize", config_path, kw)
        with stage("vectorize/read"):
            X, P = _load_vectorize_inputs(cfg)
        with stage("vectorize/interpret"):
            result = interpret(X, P, cfg.interp_params())
        with stage("vectorize/strokes"):
            g = result.graph
            seq = strokes_from_edges(len(g.vertices), g.edges)
            polylines = strokes_to_points(seq, g.vertices)
        with stage("vectorize/emit"):
            s = max(X.shape)
            out = _out_dir(cfg)
            _write_json(out / "graph.json", g.to_json())
            _write_json(out / "strokes.json", {"strokes": [p.tolist() for p in polylines]})
            (out / "strokes.gcode").write_text(gcode_text(to_gcode(polylines, s, cfg.frame())),
                                               encoding="ascii", newline="\n")
            (out / "strokes.svg").write_text(to_svg(polylines, s), encoding="utf-8")
            _write_json(out / "diagnostics.json", result.diagnostics_json())
            cfg.dump(out / "config.json")
    except StageError as exc:
        _fail(exc)
    for w in result.warnings:
        _warn(w)
    for d in result.diagnostics:
        click.echo(f"iter {d['iteration']:>2}: edges={d['edges']} absent={d['absent']} "
                   f"superfluous={d['superfluous']} tau=[{d['tau_min']:.3f}, {d['tau_max']:.3f}]")
    click.echo(f"{len(g.vertices)} vertices, {len(g.edges)} edges, {len(polylines)} strokes -> {out}")


# -- eval -----------------------------------------------------------------------

def _load_prediction(path: str) -> np.ndarray:
    if path.lower().endswith(".png"):
        return labels_to_probmap(read_label_png(path))
    return read_probmap(path)


@main.command("eval")
@config_options("pred", "truth", "out")
def eval_(config_path, **kw):
    """Per-class IoU and both loss variants of a prediction against labels."""
    try:
        cfg = _config("eval", config_path, kw)
        with stage("eval/read"):
            if cfg.pred is None or cfg.truth is None:
                raise ConfigError("--pred and --truth are required")
            P = _load_prediction(cfg.pred)
            Y = read_label_png(cfg.truth)
        with stage("eval/metrics"):
            report = metrics_report(P, Y)
        with stage("eval/write"):
            out = _out_dir(cfg)
            _write_json(out / "metrics.json", report)
    except StageError as exc:
        _fail(exc)
    iou = report["iou"]
    names = ("background", "lines", "corners")
    per = " ".join(f"{n}=" + ("n/a" if v is None else f"{v:.4f}")
                   for n, v in zip(names, iou["per_class"]))
    click.echo(f"IoU {per} mean={iou['mean']:.4f}")
    click.echo(f"loss xent={report['loss']['xent']:.6f} mwx={report['loss']['mwx']:.6f}")


# -- study ----------------------------------------------------------------------

_STUDY_COLS = ("id", "n_vertices", "n_true", "tau_hat", "eta_mean", "gap", "min_true",
               "max_nonedge", "separated")


@main.command()
@config_options("manifest", "smoothing", "split", "seed", "match_tol", "out", *INTERP)
@click.option("--betas", default=None, callback=_parse_betas,
              help="Comma-separated mask widths, e.g. 3,5,7.")
@click.option("--sweep/--no-sweep", default=None, help="Also run the fixed-threshold preset sweep.")
def study(config_path, **kw):
    """Threshold histograms per mask width and the fixed-threshold preset sweep."""
    try:
        cfg = _config("study", config_path, kw)
        with stage("study/read"):
            if cfg.manifest is None:
                raise ConfigError("--manifest is required")
            manifest = load_manifest(cfg.manifest)
            samples = list(iter_samples(manifest, cfg.split))
            if not samples:
                raise ValueError("empty dataset")
        with stage("study/thresholds"):
            params = cfg.interp_params()
            studies = threshold_study(samples, cfg.betas, cfg.smoothing, params,
                                      seed=cfg.seed, tol=cfg.match_tol)
        rows = []
        if cfg.sweep:
            with stage("study/sweep"):
                rows = preset_sweep(samples, FIXED_TAU_PRESETS, params, cfg.match_tol)
        with stage("study/write"):
            out = _out_dir(cfg)
            for st in studies:
                with open(out / f"tau_hat_beta{st.beta:g}.csv", "w", newline="", encoding="utf-8") as fh:
                    w = csv.writer(fh, lineterminator="\n")
                    w.writerow(_STUDY_COLS)
                    for r in st.records:
                        w.writerow([r.id, r.n_vertices, r.n_true, f"{r.tau_hat:.6f}",
                                    f"{r.eta_mean:.6f}", f"{r.gap:.6f}", f"{r.min_true:.6f}",
                                    f"{r.max_nonedge:.6f}", int(r.separated)])
            summary = {"images": len(samples), "betas": [st.summary() for st in studies],
                       "sweep": [r.to_dict() for r in rows]}
            _write_json(out / "summary.json", summary)
            if rows:
                with open(out / "presets.csv", "w", newline="", encoding="utf-8") as fh:
                    w = csv.writer(fh, lineterminator="\n")
                    w.writerow(("name", "beta", "tau", "adaptive", "precision", "recall", "f1"))
                    for r in rows:
                        w.writerow([r.name, f"{r.beta:g}", f"{r.tau:g}", int(r.adaptive),
                                    f"{r.precision:.4f}", f"{r.recall:.4f}", f"{r.f1:.4f}"])
            cfg.dump(out / "config.json")
    except StageError as exc:
        _fail(exc)
    for st in studies:
        sm = st.summary()
        click.echo(f"beta={st.beta:g}: {sm['images']} images ({sm['skipped']} skipped), "
                   f"tau_hat mean={sm['tau_hat_mean'] or 0:.3f}, "
                   f"separation={sm['separation_rate']:.3f}, peaks={sm['smoothed_peaks']}")
    for r in rows:
        click.echo(f"{r.name}: P={r.precision:.4f} R={r.recall:.4f} F1={r.f1:.4f}")


# -- fixture --------------------------------------------------------------------

@main.command()
@config_options("count", "seed", "out", *RASTER)
@click.option("--kind", "kinds", multiple=True, type=click.Choice(KINDS),
              help="Fixture kind; repeatable. Default: all kinds.")
@click.option("--render/--no-render", default=False,
              help="Also write input, label and graph files for every fixture.")
def fixture(config_path, kinds, render, **kw):
    """Write procedural sketches as ndjson (and optionally rendered samples)."""
    try:
        cfg = _config("fixture", config_path, kw)
        with stage("fixture/generate"):
            n = cfg.count if cfg.count is not None else len(kinds or KINDS)
            if n == 0:
                raise ValueError("empty dataset requested")
            sketches = fixture_set(n, cfg.seed, tuple(kinds) or KINDS)
        with stage("fixture/write"):
            out = _out_dir(cfg)
            path = out / "fixtures.ndjson"
            path.write_text(serialize_ndjson(sketches), encoding="utf-8")
            if render:
                params = cfg.raster_params()
                for i, sk in enumerate(sketches):
                    X, Y, g = render_sample(sk, params, params.width_for(i, cfg.seed))
                    write_sample(out, f"{i:06d}", X, Y, g)
    except StageError as exc:
        _fail(exc)
    click.echo(str(path))


if __name__ == "__main__":
    main()
