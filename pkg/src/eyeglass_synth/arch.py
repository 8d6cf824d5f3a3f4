"""Shape bookkeeping for the 22-layer residual network.

Only tensor shapes are tracked.  Padding is "same", so a stride-s layer maps
H to ceil(H / s).  Residual stages apply their stride in the first unit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidArgument

CONV, RESIDUAL, GLOBAL_POOL = "conv", "residual-unit", "global-pool"
INPUT_SHAPE = (120, 120, 3)


@dataclass(frozen=True)
class LayerSpec:
    name: str
    kind: str
    kernel: int = 1
    channels: int = 1
    stride: int = 1
    repeats: int = 1
    # conv layers per residual unit
    convs_per_unit: int = 2

    def __post_init__(self):
        if self.kind not in (CONV, RESIDUAL, GLOBAL_POOL):
            raise InvalidArgument(f"unknown layer kind {self.kind!r}")
        if min(self.kernel, self.channels, self.stride, self.repeats) < 1:
            raise InvalidArgument(f"{self.name}: kernel, channels, stride and repeats must be >= 1")

    @property
    def weight_layers(self) -> int:
        if self.kind == CONV:
            return self.repeats
        if self.kind == RESIDUAL:
            return self.repeats * self.convs_per_unit
        return 0


RESNET22 = (
    LayerSpec("Conv1.x", CONV, 5, 32, 2),
    LayerSpec("Conv2.x", CONV, 3, 64, 1),
    LayerSpec("Conv3.x", RESIDUAL, 3, 128, 2, 3),
    # 256 channels throughout: identity shortcuts rule out a 226-channel inner conv
    LayerSpec("Conv4.x", RESIDUAL, 3, 256, 2, 4),
    LayerSpec("Conv5.x", RESIDUAL, 3, 512, 2, 3),
    LayerSpec("Global Pooling", GLOBAL_POOL, channels=512),
)


def layer_output_shape(shape, spec: LayerSpec):
    h, w, c = shape
    if spec.kind == GLOBAL_POOL:
        return (1, 1, c)
    return (math.ceil(h / spec.stride), math.ceil(w / spec.stride), spec.channels)


def resnet22_shape_trace(input_shape=INPUT_SHAPE, layers=RESNET22):
    """``[(name, shape), ...]`` starting with the input."""
    trace = [("input", tuple(input_shape))]
    for spec in layers:
        trace.append((spec.name, layer_output_shape(trace[-1][1], spec)))
    return trace


def residual_unit_shapes(shape, spec: LayerSpec):
    """Per-unit output shapes; only the first unit strides."""
    out = []
    for k in range(spec.repeats):
        stride = spec.stride if k == 0 else 1
        h, w, _ = shape
        shape = (math.ceil(h / stride), math.ceil(w / stride), spec.channels)
        out.append(shape)
    return out


def count_weight_layers(layers=RESNET22) -> int:
    return sum(spec.weight_layers for spec in layers)


def format_trace(trace) -> str:
    rows = [f"{'layer':<16}{'H':>5}{'W':>5}{'C':>6}"]
    rows += [f"{name:<16}{h:>5}{w:>5}{c:>6}" for name, (h, w, c) in trace]
    return "\n".join(rows)
