"""Activation-size arithmetic for a valid-convolution U-Net ``(k1 k2 d r)``.

Contracting path: level 0 is one ``k1`` conv then ``r - 1`` ``k2`` convs; each
of the ``d`` deeper levels is a 2x2 stride-2 valid conv followed by ``r`` valid
``k2`` convs (the deepest level is the bottom). The expanding path comes in two
flavours:

``mirror``
    every contracting op is undone in reverse by its valid transpose
    (``k`` conv -> ``k`` transpose conv, stride-2 down -> stride-2 up), so with
    exact downsampling the output matches the input size.
``shrink``
    after each stride-2 up the level applies ``r`` ordinary valid ``k2`` convs,
    as in the original U-Net; skips then only line up for ``k2 == 1``.

Skip connections are concatenated crop-free right after each up-sampling, so
the up-sampled size must equal the contracting activation it joins.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional


@dataclass(frozen=True)
class NetSpec:
    k1: int
    k2: int
    d: int
    r: int

    def __post_init__(self):
        for name in ("k1", "k2"):
            k = getattr(self, name)
            if k < 1 or k % 2 == 0:
                raise ValueError(f"{name} must be an odd positive kernel size, got {k}")
        if self.d < 1 or self.r < 1:
            raise ValueError("depth d and layers-per-level r must be >= 1")

    @classmethod
    def parse(cls, text: str) -> "NetSpec":
        return cls(*(int(t) for t in text.replace(",", " ").split()))


@dataclass
class Stage:
    name: str
    op: str
    size_in: int
    size_out: int


@dataclass
class ShapeReport:
    spec: NetSpec
    input_size: int
    mode: str
    stages: list[Stage] = field(default_factory=list)
    feasible: bool = True
    failure: Optional[str] = None

    @property
    def output_size(self) -> int:
        return self.stages[-1].size_out if self.stages else self.input_size

    def to_dict(self) -> dict:
        return {
            "spec": [self.spec.k1, self.spec.k2, self.spec.d, self.spec.r],
            "input_size": self.input_size,
            "mode": self.mode,
            "stages": [vars(s) for s in self.stages],
            "output_size": self.output_size,
            "feasible": self.feasible,
            "failure": self.failure,
        }


def conv(n: int, k: int) -> int:
    return n - k + 1


def transpose_conv(n: int, k: int) -> int:
    return n + k - 1


def down(n: int) -> int:
    return (n - 2) // 2 + 1


def up(n: int) -> int:
    return 2 * (n - 1) + 2


def apply_op(op: str, n: int) -> int:
    kind, _, arg = op.partition(":")
    if kind == "conv":
        return conv(n, int(arg))
    if kind == "tconv":
        return transpose_conv(n, int(arg))
    if kind == "down":
        return down(n)
    if kind == "up":
        return up(n)
    raise ValueError(f"unknown op {op!r}")


def unet_shapes(spec: NetSpec, input_size: int, mode: str = "mirror") -> ShapeReport:
    """Trace activation sizes through the network and report feasibility.

    Infeasibility (non-positive size, inexact downsampling, skip mismatch) is
    recorded on the report with the first failing stage; the trace continues so
    every stage size is still listed.
    """
    if mode not in ("mirror", "shrink"):
        raise ValueError(f"unknown mode {mode!r}")
    rep = ShapeReport(spec, input_size, mode)
    n = input_size

    def step(name, op):
        nonlocal n
        out = apply_op(op, n)
        rep.stages.append(Stage(name, op, n, out))
        if out < 1:
            fail(f"{name}: non-positive size {out}")
        n = out

    def fail(msg):
        if rep.feasible:
            rep.feasible, rep.failure = False, msg

    level_ops: list[list[str]] = [[f"conv:{spec.k1}"] + [f"conv:{spec.k2}"] * (spec.r - 1)]
    for _ in range(spec.d):
        level_ops.append(["down"] + [f"conv:{spec.k2}"] * spec.r)

    skips = []
    for lvl, ops in enumerate(level_ops):
        for i, op in enumerate(ops):
            if op == "down" and (n - 2) % 2 != 0:
                fail(f"down{lvl}: size {n} does not halve exactly")
            step(f"down{lvl}" if op == "down" else f"enc{lvl}.{i}", op)
        skips.append(n)

    for lvl in range(spec.d, 0, -1):
        if mode == "mirror":
            for i, op in enumerate(reversed(level_ops[lvl][1:])):
                step(f"dec{lvl}.{i}", "t" + op)
            step(f"up{lvl}", "up")
        else:
            step(f"up{lvl}", "up")
        if n != skips[lvl - 1]:
            fail(f"up{lvl}: size {n} does not match skip size {skips[lvl - 1]}")
        if mode == "shrink":
            for i in range(spec.r):
                step(f"dec{lvl - 1}.{i}", f"conv:{spec.k2}")
    if mode == "mirror":
        for i, op in enumerate(reversed(level_ops[0])):
            step(f"dec0.{i}", "t" + op)
    return rep


def feasible_sizes(spec: NetSpec, lo: int, hi: int, mode: str = "mirror") -> list[int]:
    """Input sizes in ``[lo, hi]`` for which every stage is exact and skips match."""
    return [n for n in range(lo, hi + 1) if unet_shapes(spec, n, mode).feasible]
