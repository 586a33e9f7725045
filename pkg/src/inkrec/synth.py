"""Parametric synthetic stroke generator.

Stands in for a real pen corpus: six shape families at desk scale with
per-writer rotation/scale bias and per-sample jitter.  Everything is keyed
off integer seed material (seed, label, writer, session, sample index), so
generation is deterministic and order-independent — generating sample 17
alone yields the same points as generating all of them.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from .ink import Dataset, InkTrace, StrokeSample

FAMILIES = ("line", "arc", "loop", "zigzag", "hook", "s-curve")

# Device-ish output scale: preprocessing normalizes it away, but realistic
# magnitudes exercise the normalization path.
_SCALE = 420.0
_OFFSET = np.array([180.0, 260.0])


@dataclass(frozen=True)
class ShapeSpec:
    label: str
    family: str
    angle: float = 0.0        # orientation, radians
    curvature: float = 1.0    # sweep size / bend direction for curved families
    turns: int = 3            # zigzag direction changes
    noise: float = 0.01       # gaussian jitter, fraction of the unit box
    points_min: int = 40
    points_max: int = 72
    bias_seed: int = 0        # extra seed material for writer bias

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}")
        if self.noise < 0:
            raise ValueError("noise must be >= 0")
        if not 2 <= self.points_min <= self.points_max:
            raise ValueError("need 2 <= points_min <= points_max")
        if self.turns < 1:
            raise ValueError("turns must be >= 1")


def _base_curve(spec: ShapeSpec, s: np.ndarray) -> np.ndarray:
    """Family geometry on parameter s in [0, 1], roughly unit scale."""
    if spec.family == "line":
        return np.outer(s, [1.0, 0.0])
    if spec.family == "arc":
        sweep = spec.curvature * 0.9 * np.pi
        th = -0.5 * sweep + s * sweep
        return np.column_stack([np.sin(th), -np.cos(th)])
    if spec.family == "loop":
        th = s * 2.1 * np.pi * np.sign(spec.curvature or 1.0)
        r = 0.5 * (1.0 + 0.15 * s)  # spiral slightly so start != end
        return np.column_stack([r * np.cos(th), 0.7 * r * np.sin(th)])
    if spec.family == "zigzag":
        k = spec.turns + 1
        xs = s
        tri = 2.0 * np.abs(k * s - np.floor(k * s + 0.5))  # triangle wave
        return np.column_stack([xs, 0.35 * tri])
    if spec.family == "hook":
        # straight descent, then a circular bend
        out = np.zeros((len(s), 2))
        split = 0.55
        a = s < split
        out[a] = np.outer(s[a] / split, [0.0, -1.0])
        th = (s[~a] - split) / (1 - split) * abs(spec.curvature) * 0.75 * np.pi
        r = 0.45
        out[~a, 0] = np.sign(spec.curvature or 1.0) * (r - r * np.cos(th))
        out[~a, 1] = -1.0 + r * np.sin(th)
        return out
    if spec.family == "s-curve":
        # two opposing half-circles stacked vertically
        out = np.zeros((len(s), 2))
        a = s < 0.5
        th1 = s[a] * 2 * np.pi
        out[a] = np.column_stack([0.25 * np.sin(th1), -s[a]])
        th2 = (s[~a] - 0.5) * 2 * np.pi
        out[~a] = np.column_stack([-0.25 * np.sin(th2), -s[~a]])
        return out
    raise AssertionError("unreachable")


def _rot(angle: float) -> np.ndarray:
    c, si = np.cos(angle), np.sin(angle)
    return np.array([[c, -si], [si, c]])


def _label_key(label: str) -> int:
    return zlib.crc32(label.encode("utf-8"))


def _writer_bias(spec: ShapeSpec, seed: int, writer: int):
    rng = np.random.default_rng([seed, spec.bias_seed, _label_key(spec.label), writer, 7919])
    rotation = rng.normal(0.0, 0.07)
    scale = float(np.exp(rng.normal(0.0, 0.06)))
    return rotation, scale


def _one_sample(spec: ShapeSpec, seed: int, writer: int, session: int, index: int) -> InkTrace:
    rng = np.random.default_rng(
        [seed, spec.bias_seed, _label_key(spec.label), writer, session, index]
    )
    m = int(rng.integers(spec.points_min, spec.points_max + 1))
    s = np.linspace(0.0, 1.0, m)
    # jitter the parameterization (not the endpoints) by < half a step so the
    # polyline stays monotone in s; with noise 0 the geometry is unchanged
    s[1:-1] += rng.uniform(-0.3, 0.3, m - 2) / (m - 1)
    pts = _base_curve(spec, s)
    rot, scale = _writer_bias(spec, seed, writer)
    pts = (pts @ _rot(spec.angle + rot).T) * scale
    if spec.noise > 0:
        pts = pts + rng.normal(0.0, spec.noise, pts.shape)
    pts = pts * _SCALE + _OFFSET
    t = (np.arange(m) * 8).astype(np.int64)
    return InkTrace(pts, t)


def generate(spec: ShapeSpec, n: int, writers: int, sessions: int, seed: int) -> Dataset:
    """n StrokeSamples per (writer, session), all labeled spec.label."""
    if n < 1 or writers < 1 or sessions < 1:
        raise ValueError("n, writers, sessions must all be >= 1")
    samples = []
    for w in range(writers):
        for sess in range(1, sessions + 1):
            for i in range(n):
                samples.append(
                    StrokeSample(
                        _one_sample(spec, seed, w, sess, i),
                        spec.label,
                        f"w{w:03d}",
                        sess,
                    )
                )
    return Dataset(samples)


def default_specs(count: int, noise: float = 0.02) -> list[ShapeSpec]:
    """A catalog of visually distinct shapes; the first `count` are returned."""
    catalog = [
        ShapeSpec("st01", "line", angle=0.0, noise=noise),
        ShapeSpec("st02", "line", angle=np.pi / 2, noise=noise),
        ShapeSpec("st03", "arc", curvature=1.0, noise=noise),
        ShapeSpec("st04", "arc", curvature=-1.0, noise=noise),
        ShapeSpec("st05", "loop", curvature=1.0, noise=noise),
        ShapeSpec("st06", "zigzag", turns=3, noise=noise),
        ShapeSpec("st07", "hook", curvature=1.0, noise=noise),
        ShapeSpec("st08", "s-curve", noise=noise),
        ShapeSpec("st09", "line", angle=np.pi / 4, noise=noise),
        ShapeSpec("st10", "zigzag", turns=5, angle=np.pi / 3, noise=noise),
        ShapeSpec("st11", "loop", curvature=-1.0, angle=np.pi / 2, noise=noise),
        ShapeSpec("st12", "hook", curvature=-1.0, angle=np.pi, noise=noise),
    ]
    if not 1 <= count <= len(catalog):
        raise ValueError(f"count must be in 1..{len(catalog)}")
    return catalog[:count]
