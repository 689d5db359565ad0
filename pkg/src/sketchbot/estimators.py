"""scikit-learn compatible wrappers around the pipeline stages.

The estimators are stateless transforms: ``fit`` only validates parameters,
so they can sit in a ``Pipeline`` or be cloned and grid-searched like any
other estimator.
"""
from __future__ import annotations

from dataclasses import fields

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_gray_image, check_probmap, check_same_shape
from .emit import MachineFrame, to_gcode, to_svg
from .graph import InterpParams, StrokeGraph, interpret
from .raster import labels_to_probmap, make_labels, rasterize
from .sketch import normalize
from .strokes import strokes_from_edges, strokes_to_points


class SketchRasterizer(TransformerMixin, BaseEstimator):
    """Render vector sketches to ``(n, s, s)`` input images and label images.

    Parameters
    ----------
    canvas_size : int, default=256
        Side of the square canvas in pixels.
    stroke_width : float, default=2.0
        Pen width in pixels.
    corner_radius : float, default=3.0
        Radius of the corner discs in the label image.
    """

    def __init__(self, canvas_size=256, stroke_width=2.0, corner_radius=3.0):
        self.canvas_size = canvas_size
        self.stroke_width = stroke_width
        self.corner_radius = corner_radius

    def fit(self, X=None, y=None):
        if self.canvas_size < 32:
            raise ValueError("canvas_size must be >= 32")
        if self.stroke_width <= 0 or self.corner_radius <= 0:
            raise ValueError("stroke_width and corner_radius must be positive")
        self.n_features_in_ = self.canvas_size * self.canvas_size
        return self

    def _normalized(self, sketches):
        return [normalize(sk, self.canvas_size, self.stroke_width, self.corner_radius)
                for sk in sketches]

    def transform(self, sketches) -> np.ndarray:
        """Input images, shape ``(n, s, s)``, values in {0, 1}."""
        check_is_fitted(self, "n_features_in_")
        return np.stack([rasterize(sk, self.stroke_width) for sk in self._normalized(sketches)])

    def transform_labels(self, sketches) -> np.ndarray:
        """Label images, shape ``(n, s, s)``, ids 0=background 1=lines 2=corners."""
        check_is_fitted(self, "n_features_in_")
        return np.stack([make_labels(sk, self.stroke_width, self.corner_radius)[1]
                         for sk in self._normalized(sketches)])


_INTERP_FIELDS = [f.name for f in fields(InterpParams)]


class GraphInterpreter(BaseEstimator):
    """Estimator form of :func:`sketchbot.graph.interpret`.

    Constructor arguments mirror :class:`InterpParams`. ``predict`` takes an
    input image and its class-probability map (or a label image, converted to
    a one-hot map) and returns a :class:`StrokeGraph`. The last call's
    per-iteration diagnostics are kept in ``diagnostics_``.
    """

    def __init__(self, beta=1.8, tau0=0.35, update_rate=0.05, n_iters=10,
                 binarize_threshold=0.5, min_blob_area=4, dilate_px=2, connectivity=8,
                 stroke_width=2.0, corner_radius=3.0, block_radius=2.0, bbox_pad=None,
                 max_edge_length=None):
        self.beta = beta
        self.tau0 = tau0
        self.update_rate = update_rate
        self.n_iters = n_iters
        self.binarize_threshold = binarize_threshold
        self.min_blob_area = min_blob_area
        self.dilate_px = dilate_px
        self.connectivity = connectivity
        self.stroke_width = stroke_width
        self.corner_radius = corner_radius
        self.block_radius = block_radius
        self.bbox_pad = bbox_pad
        self.max_edge_length = max_edge_length

    def _params(self) -> InterpParams:
        return InterpParams(**{k: getattr(self, k) for k in _INTERP_FIELDS})

    def fit(self, X=None, y=None):
        self.params_ = self._params()
        return self

    def predict(self, X, P) -> StrokeGraph:
        check_is_fitted(self, "params_")
        X = check_gray_image(X, "input image")
        P = np.asarray(P)
        if P.ndim == 2:
            P = labels_to_probmap(P)
        P = check_probmap(P)
        check_same_shape(X.shape, P.shape[1:], "input image", "probability map")
        result = interpret(X, P, self.params_)
        self.diagnostics_ = result.diagnostics
        return result.graph

    def fit_predict(self, X, P) -> StrokeGraph:
        return self.fit().predict(X, P)


class StrokeSequencer(TransformerMixin, BaseEstimator):
    """Turn a :class:`StrokeGraph` into ordered polylines (canvas coordinates)."""

    def fit(self, X=None, y=None):
        self.fitted_ = True
        return self

    def transform(self, graph: StrokeGraph) -> list[np.ndarray]:
        check_is_fitted(self, "fitted_")
        seq = strokes_from_edges(len(graph.vertices), graph.edges)
        return strokes_to_points(seq, graph.vertices)


class PlotterWriter(BaseEstimator):
    """Serialize polylines as G-code lines or an SVG document."""

    def __init__(self, canvas_size=256, box_size_mm=64.0, origin_mm=(25.0, 25.0),
                 safe_z_mm=-5.0, unit_scale=1.0):
        self.canvas_size = canvas_size
        self.box_size_mm = box_size_mm
        self.origin_mm = origin_mm
        self.safe_z_mm = safe_z_mm
        self.unit_scale = unit_scale

    def fit(self, X=None, y=None):
        self.frame_ = MachineFrame(self.box_size_mm, tuple(self.origin_mm), self.safe_z_mm,
                                   self.unit_scale)
        return self

    def gcode(self, strokes) -> list[str]:
        check_is_fitted(self, "frame_")
        return to_gcode(strokes, self.canvas_size, self.frame_)

    def svg(self, strokes) -> str:
        return to_svg(strokes, self.canvas_size)
