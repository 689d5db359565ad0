import numpy as np
import pytest

from sketchbot.dataset import RasterParams, Sample, render_sample
from sketchbot.sketch import Sketch


def make_sample(sketch: Sketch, width: float = 2.0, s: int = 256, sid: str = "x") -> Sample:
    X, Y, g = render_sample(sketch, RasterParams(s=s, stroke_width=width), width)
    return Sample(sid, "test", X, Y, g)


def canvas_sketch(strokes, s=256) -> Sketch:
    """Sketch already placed on an ``s x s`` canvas (no normalization)."""
    return Sketch([np.asarray(p, dtype=float) for p in strokes], canvas_size=s)


@pytest.fixture
def triangle_sample():
    from sketchbot.fixtures import fixture
    return make_sample(fixture("triangle"))


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line for the end-of-run summary."""
    def _report(criterion: int, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
