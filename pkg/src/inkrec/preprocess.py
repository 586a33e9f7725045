"""Five-stage trace normalization: dedup, size-normalize, smooth, fill gaps, resample.

Every trace entering feature extraction passes through ``preprocess_pipeline``
and comes out with a fixed point count inside the unit square, invariant to
translation and uniform scaling of the input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ink import InkTrace


@dataclass(frozen=True)
class PreprocessConfig:
    resample_count: int = 64
    smooth_window: int = 3
    gap_threshold: float = 3.0

    def __post_init__(self):
        if self.resample_count < 4:
            raise ValueError("resample_count must be >= 4")
        if self.smooth_window < 1 or self.smooth_window % 2 == 0:
            raise ValueError("smooth_window must be odd and >= 1")
        if self.gap_threshold <= 1:
            raise ValueError("gap_threshold must be > 1")


def remove_duplicates(trace: InkTrace) -> InkTrace:
    """Drop points that repeat the previous (x, y) exactly; first occurrence kept."""
    xy = trace.xy
    if len(xy) == 1:
        return trace
    keep = np.empty(len(xy), dtype=bool)
    keep[0] = True
    keep[1:] = np.any(xy[1:] != xy[:-1], axis=1)
    return InkTrace(
        xy[keep],
        None if trace.t is None else trace.t[keep],
        degenerate=trace.degenerate,
    )


def normalize_size(trace: InkTrace) -> InkTrace:
    """Scale into the unit square preserving aspect ratio.

    The longer bounding-box side spans exactly [0, 1]; the shorter side is
    centered.  A trace whose points all coincide carries no shape: it maps to
    (0.5, 0.5) and is flagged degenerate.
    """
    xy = trace.xy
    lo = xy.min(axis=0)
    ext = xy.max(axis=0) - lo
    m = ext.max()
    if m == 0.0:
        out = np.full_like(xy, 0.5)
        return InkTrace(out, trace.t, degenerate=True)
    # (ext/m) is exactly 1.0 on the longer axis, so that axis gets offset 0
    # and its extreme points land exactly on 0 and 1.
    offset = (1.0 - ext / m) / 2.0
    return InkTrace((xy - lo) / m + offset, trace.t, degenerate=trace.degenerate)


def smooth(trace: InkTrace, window: int) -> InkTrace:
    """Moving-average smoothing with a centered window.

    Near the ends the window shrinks symmetrically (radius min(r, i, n-1-i))
    so the first and last points pass through unchanged — resampling later
    pins endpoints too, which keeps the whole pipeline near-idempotent.
    """
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be odd and >= 1")
    xy = trace.xy
    n = len(xy)
    r = window // 2
    if r == 0 or n < 3:
        return InkTrace(xy.copy(), trace.t, degenerate=trace.degenerate)
    idx = np.arange(n)
    ri = np.minimum(r, np.minimum(idx, n - 1 - idx))
    cs = np.vstack([np.zeros(2), np.cumsum(xy, axis=0)])
    sums = cs[idx + ri + 1] - cs[idx - ri]
    out = sums / (2 * ri + 1)[:, None]
    # radius 0 at the ends means identity; write it exactly (cumsum
    # differencing would otherwise leave one-ulp residue on the endpoints)
    out[ri == 0] = xy[ri == 0]
    return InkTrace(out, trace.t, degenerate=trace.degenerate)


def interpolate_missing(trace: InkTrace, gap_threshold: float) -> InkTrace:
    """Fill abnormally large gaps by linear interpolation.

    A gap counts as abnormal when it exceeds gap_threshold x the median
    consecutive-point distance; enough points are inserted that no surviving
    gap exceeds the median itself.  Timestamps, when present, interpolate
    linearly and round to integers.
    """
    if gap_threshold <= 1:
        raise ValueError("gap_threshold must be > 1")
    xy = trace.xy
    if len(xy) < 2:
        return trace
    gaps = np.linalg.norm(np.diff(xy, axis=0), axis=1)
    med = float(np.median(gaps))
    if med == 0.0:
        # No meaningful distance scale (coincident points dominate); after
        # duplicate removal this cannot happen.
        return trace
    limit = gap_threshold * med
    if not np.any(gaps > limit):
        return trace
    pieces_xy = []
    pieces_t: list[np.ndarray] = []
    for i in range(len(xy) - 1):
        pieces_xy.append(xy[i : i + 1])
        if trace.t is not None:
            pieces_t.append(trace.t[i : i + 1])
        if gaps[i] > limit:
            k = math.ceil(gaps[i] / med) - 1
            fracs = np.arange(1, k + 1) / (k + 1)
            pieces_xy.append(xy[i] + fracs[:, None] * (xy[i + 1] - xy[i]))
            if trace.t is not None:
                t0, t1 = trace.t[i], trace.t[i + 1]
                pieces_t.append(np.rint(t0 + fracs * (t1 - t0)).astype(np.int64))
    pieces_xy.append(xy[-1:])
    if trace.t is not None:
        pieces_t.append(trace.t[-1:])
    return InkTrace(
        np.concatenate(pieces_xy),
        np.concatenate(pieces_t) if trace.t is not None else None,
        degenerate=trace.degenerate,
    )


def resample(trace: InkTrace, n: int) -> InkTrace:
    """Redistribute to n points equidistant in cumulative arc length.

    First and last points are preserved exactly.  A zero-length trace has no
    arc to walk, so its point is replicated n times (degenerate).  Timestamps
    do not survive: resampled points are not observations.
    """
    if n < 2:
        raise ValueError("resample count must be >= 2")
    xy = trace.xy
    seg = np.linalg.norm(np.diff(xy, axis=0), axis=1) if len(xy) > 1 else np.zeros(0)
    total = float(seg.sum())
    if total == 0.0:
        return InkTrace(np.tile(xy[0], (n, 1)), degenerate=True)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    targets = np.linspace(0.0, total, n)
    out = np.column_stack([np.interp(targets, cum, xy[:, 0]), np.interp(targets, cum, xy[:, 1])])
    out[0] = xy[0]
    out[-1] = xy[-1]
    return InkTrace(out, degenerate=trace.degenerate)


def preprocess_pipeline(trace: InkTrace, cfg: PreprocessConfig | None = None) -> InkTrace:
    """Run the five stages in order; output has exactly cfg.resample_count points."""
    cfg = cfg or PreprocessConfig()
    out = remove_duplicates(trace)
    out = normalize_size(out)
    out = smooth(out, cfg.smooth_window)
    out = interpolate_missing(out, cfg.gap_threshold)
    return resample(out, cfg.resample_count)
