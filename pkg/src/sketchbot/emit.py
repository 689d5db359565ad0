"""G-code and SVG output for pen plotters and drawing arms."""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Sequence
from xml.sax.saxutils import quoteattr

import numpy as np

ENGAGE = "G01 Z0"


@dataclass(frozen=True)
class MachineFrame:
    """Drawing box on the machine bed.

    Canvas coordinates map into a ``box_size_mm`` square whose lower-left
    corner is ``origin_mm``; image rows grow downward, machine Y grows upward.
    ``unit_scale`` converts millimetres to machine units (0.1 for cm, 1/25.4
    for inches) and applies to every emitted number including the lift height.
    Coordinates are absolute; the program assumes the machine is in G90 mode.
    """

    box_size_mm: float = 64.0
    origin_mm: tuple[float, float] = (25.0, 25.0)
    safe_z_mm: float = -5.0
    unit_scale: float = 1.0

    def __post_init__(self):
        if self.box_size_mm <= 0:
            raise ValueError("box_size_mm must be positive")
        if self.unit_scale <= 0:
            raise ValueError("unit_scale must be positive")

    def to_machine(self, x: float, y: float, s: float) -> tuple[float, float]:
        mx = self.origin_mm[0] + (x / s) * self.box_size_mm
        my = self.origin_mm[1] + (1.0 - y / s) * self.box_size_mm
        return mx * self.unit_scale, my * self.unit_scale

    def to_canvas(self, mx: float, my: float, s: float) -> tuple[float, float]:
        mx, my = mx / self.unit_scale, my / self.unit_scale
        x = (mx - self.origin_mm[0]) / self.box_size_mm * s
        y = (1.0 - (my - self.origin_mm[1]) / self.box_size_mm) * s
        return x, y

    @property
    def disengage(self) -> str:
        return f"G00 Z{_num(self.safe_z_mm * self.unit_scale)}"


def _num(v: float) -> str:
    # shortest fixed-point form with at most 2 decimals: 5 -> "5", 2.50 -> "2.5"
    text = f"{v:.2f}".rstrip("0").rstrip(".")
    return "0" if text in ("-0", "") else text


def to_gcode(strokes: Sequence, s: float, frame: Optional[MachineFrame] = None,
             header: Optional[Sequence[str]] = None) -> list[str]:
    """Program lines: initial lift, then per stroke move / engage / draw / lift."""
    frame = frame or MachineFrame()
    lines = list(header or [])
    lines.append(frame.disengage)
    for k, stroke in enumerate(strokes):
        pts = np.asarray(stroke, dtype=float).reshape(-1, 2)
        if len(pts) < 2:
            raise ValueError(f"stroke {k} has fewer than 2 vertices")
        bad = np.flatnonzero(np.any((pts < 0) | (pts > s) | ~np.isfinite(pts), axis=1))
        if len(bad):
            raise ValueError(f"stroke {k} vertex {int(bad[0])} {tuple(pts[bad[0]])} lies outside the "
                             f"[0, {s}] canvas")
        moves = [frame.to_machine(x, y, s) for x, y in pts]
        lines.append(_xy(*moves[0]))
        lines.append(ENGAGE)
        lines.extend(_xy(*m) for m in moves[1:])
        lines.append(frame.disengage)
    return lines


def _xy(x: float, y: float) -> str:
    return f"X{x:.2f} Y{y:.2f}".replace("-0.00", "0.00")


def gcode_text(lines: Sequence[str]) -> str:
    return "".join(line + "\n" for line in lines)


_XY = re.compile(r"^X(-?\d+\.\d+) Y(-?\d+\.\d+)$")


def parse_gcode_strokes(lines: Sequence[str]) -> list[list[tuple[float, float]]]:
    """Recover machine-coordinate strokes from a program written by ``to_gcode``."""
    strokes, current, pen_down, last = [], None, False, None
    for line in lines:
        m = _XY.match(line)
        if m:
            pt = (float(m.group(1)), float(m.group(2)))
            if pen_down:
                current.append(pt)
            else:
                last = pt
        elif line == ENGAGE:
            pen_down, current = True, [last]
        elif line.startswith("G00 Z"):
            if pen_down:
                strokes.append(current)
            pen_down = False
    return strokes


def to_svg(strokes: Sequence, s: float, stroke_width: float = 1.0) -> str:
    """SVG document with one ``<path d="M x0 y0 L x1 y1 ...">`` per stroke."""
    size = _num(s)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width={quoteattr(size)} height={quoteattr(size)} '
        f'viewBox="0 0 {size} {size}" fill="none" stroke="black" stroke-width={quoteattr(_num(stroke_width))}>',
    ]
    for stroke in strokes:
        pts = np.asarray(stroke, dtype=float).reshape(-1, 2)
        cmds = [f"M {_num(pts[0, 0])} {_num(pts[0, 1])}"]
        cmds += [f"L {_num(x)} {_num(y)}" for x, y in pts[1:]]
        out.append(f'<path d="{" ".join(cmds)}" />')
    out.append("</svg>")
    return "\n".join(out) + "\n"
