from pathlib import Path
from xml.etree import ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sketchbot.emit import (ENGAGE, MachineFrame, gcode_text, parse_gcode_strokes, to_gcode,
                            to_svg)

GOLDEN = Path(__file__).parent / "golden"
SVG_NS = "{http://www.w3.org/2000/svg}"


def test_empty_program():
    assert to_gcode([], 256) == ["G00 Z-5"]


def test_diagonal_golden():
    lines = to_gcode([[(0, 0), (256, 256)]], 256)
    assert lines == ["G00 Z-5", "X25.00 Y89.00", "G01 Z0", "X89.00 Y25.00", "G00 Z-5"]
    assert gcode_text(lines).encode("ascii") == (GOLDEN / "diagonal.gcode").read_bytes()


def test_midpoint_mapping():
    assert to_gcode([[(128, 128), (0, 0)]], 256)[1] == "X57.00 Y57.00"


def test_unit_scale_applies_to_every_number():
    lines = to_gcode([[(0, 0), (256, 256)]], 256, MachineFrame(unit_scale=0.1))
    assert lines == ["G00 Z-0.5", "X2.50 Y8.90", "G01 Z0", "X8.90 Y2.50", "G00 Z-0.5"]


def test_out_of_canvas_rejected():
    with pytest.raises(ValueError, match="outside"):
        to_gcode([[(0, 0), (300, 10)]], 256)
    with pytest.raises(ValueError, match="fewer than 2"):
        to_gcode([[(0, 0)]], 256)


def test_svg_golden():
    strokes = [[(0, 0), (10, 10)], [(12.5, 3.0), (40.25, 7.1262), (12.5, 3.0)]]
    assert to_svg(strokes, 256).encode("utf-8") == (GOLDEN / "two_strokes.svg").read_bytes()


def test_svg_path_grammar():
    assert '<path d="M 0 0 L 10 10" />' in to_svg([[(0, 0), (10, 10)]], 256)
    root = ET.fromstring(to_svg([], 256))
    assert root.tag == SVG_NS + "svg" and root.findall(SVG_NS + "path") == []
    d = ET.fromstring(to_svg([[(1, 2), (3, 4), (5, 6)]], 256)).find(SVG_NS + "path").get("d")
    assert d.count("M") == 1 and d.count("L") == 2


strokes_st = st.lists(
    st.lists(st.tuples(st.floats(0, 256), st.floats(0, 256)), min_size=2, max_size=6),
    max_size=8)


@settings(max_examples=200, deadline=None)
@given(strokes_st)
def test_engage_disengage_pairing(strokes):
    lines = to_gcode(strokes, 256)
    assert lines[0].startswith("G00 Z")
    state = "up"
    engages = 0
    for line in lines[1:]:
        if line == ENGAGE:
            assert state == "up"
            state, engages = "down", engages + 1
        elif line.startswith("G00 Z"):
            assert state == "down"
            state = "up"
    assert state == "up" and engages == len(strokes)
    back = parse_gcode_strokes(lines)
    assert [len(s) for s in back] == [len(s) for s in strokes]
    frame = MachineFrame()
    for got, want in zip(back, strokes):
        for (mx, my), (x, y) in zip(got, want):
            cx, cy = frame.to_canvas(mx, my, 256)
            assert abs(cx - x) <= 0.005 * 256 / 64 + 1e-9 and abs(cy - y) <= 0.005 * 256 / 64 + 1e-9


@settings(max_examples=100, deadline=None)
@given(strokes_st)
def test_svg_parses_with_one_path_per_stroke(strokes):
    root = ET.fromstring(to_svg(strokes, 256))
    assert len(root.findall(SVG_NS + "path")) == len(strokes)


def test_frame_roundtrip():
    f = MachineFrame(box_size_mm=80, origin_mm=(10, 5), unit_scale=1 / 25.4)
    for x, y in [(0, 0), (13.5, 200.25), (256, 256)]:
        np.testing.assert_allclose(f.to_canvas(*f.to_machine(x, y, 256), 256), (x, y), atol=1e-9)
