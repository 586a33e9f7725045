"""6-D observation vectors (x, y, dx, dy, ddx, ddy) from preprocessed traces.

Derivatives use the regression-delta convention: a least-squares slope over a
window of W frames either side,

    d_t = sum_{theta=1..W} theta * (c_{t+theta} - c_{t-theta})
          / (2 * sum_{theta=1..W} theta^2)

with boundary frames replicated so output length equals input length.  A plain
central difference (c_{t+1} - c_{t-1}) / 2 is available as ``mode="central"``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ink import InkTrace

FEATURE_DIM = 6

DERIVATIVE_MODES = ("regression", "central")


@dataclass(frozen=True)
class FeatureConfig:
    mode: str = "regression"
    window: int = 2

    def __post_init__(self):
        if self.mode not in DERIVATIVE_MODES:
            raise ValueError(f"mode must be one of {DERIVATIVE_MODES}")
        if self.window < 1:
            raise ValueError("window must be >= 1")


@dataclass(frozen=True)
class FeatureSequence:
    """Frames is an (n, 6) array: one row per source point."""

    frames: np.ndarray
    source_length: int

    def __post_init__(self):
        if self.frames.ndim != 2 or self.frames.shape[1] != FEATURE_DIM:
            raise ValueError(f"frames must be (n, {FEATURE_DIM})")
        if self.frames.shape[0] != self.source_length:
            raise ValueError("frame count must equal source length")
        if not np.all(np.isfinite(self.frames)):
            raise ValueError("features must be finite")

    def __len__(self) -> int:
        return self.frames.shape[0]


def _delta(series: np.ndarray, window: int, mode: str) -> np.ndarray:
    n = len(series)
    if mode == "central":
        window = 1
    # Pad by edge replication so c_{t-theta}/c_{t+theta} exist everywhere.
    padded = np.concatenate(
        [np.full(window, series[0]), series, np.full(window, series[-1])]
    )
    if mode == "central":
        return (padded[2:] - padded[:-2]) / 2.0
    num = np.zeros(n)
    denom = 0
    for theta in range(1, window + 1):
        num += theta * (padded[window + theta : window + theta + n]
                        - padded[window - theta : window - theta + n])
        denom += theta * theta
    return num / (2.0 * denom)


def first_derivative(series, window: int = 2, mode: str = "regression") -> np.ndarray:
    """Regression-delta slope estimate per frame; length preserved."""
    series = np.asarray(series, dtype=np.float64)
    if series.ndim != 1 or len(series) == 0:
        raise ValueError("series must be a non-empty 1-D sequence")
    if window < 1:
        raise ValueError("window must be >= 1")
    return _delta(series, window, mode)


def second_derivative(series, window: int = 2, mode: str = "regression") -> np.ndarray:
    """The delta of the delta (same window both passes)."""
    return first_derivative(first_derivative(series, window, mode), window, mode)


def extract(trace: InkTrace, cfg: FeatureConfig | None = None) -> FeatureSequence:
    """Per-frame (x, y, dx, dy, ddx, ddy); expects a preprocessed trace."""
    cfg = cfg or FeatureConfig()
    if len(trace) == 0:
        raise ValueError("cannot extract features from an empty trace")
    x = trace.xy[:, 0]
    y = trace.xy[:, 1]
    dx = first_derivative(x, cfg.window, cfg.mode)
    dy = first_derivative(y, cfg.window, cfg.mode)
    ddx = first_derivative(dx, cfg.window, cfg.mode)
    ddy = first_derivative(dy, cfg.window, cfg.mode)
    frames = np.column_stack([x, y, dx, dy, ddx, ddy])
    return FeatureSequence(frames, len(trace))
