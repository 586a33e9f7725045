"""Core ink data types and their line-delimited on-disk format.

A dataset is a directory of ``.jsonl`` files, one record per line:

    {"kind": "stroke"|"akshara", "label": str, "unicode": str?,
     "writer": str, "session": int, "strokes": [[[x, y, t?], ...], ...]}

Stroke records carry exactly one stroke; akshara records carry 1-8.
Coordinates are written as decimal text at full precision so that a
save/load round trip is bit-exact.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, NamedTuple, Sequence

import numpy as np

logger = logging.getLogger(__name__)

MAX_AKSHARA_STROKES = 8

_RECORD_KEYS = {"kind", "label", "unicode", "writer", "session", "strokes"}


class SchemaError(ValueError):
    """A record violates the ink file schema; message carries file/line context."""


class Point(NamedTuple):
    x: float
    y: float
    t: int | None = None


class InkTrace:
    """One pen-down trajectory: an ordered, non-empty run of 2-D points.

    Coordinates live in device units before normalization and in the unit
    square afterwards.  Timestamps are optional (the features never use
    them) and must be non-decreasing when present.
    """

    __slots__ = ("xy", "t", "degenerate")

    def __init__(
        self,
        xy: np.ndarray | Sequence[Sequence[float]],
        t: np.ndarray | Sequence[int] | None = None,
        degenerate: bool = False,
    ):
        xy = np.asarray(xy, dtype=np.float64)
        if xy.ndim != 2 or xy.shape[1] != 2 or xy.shape[0] == 0:
            raise ValueError("trace must be a non-empty (n, 2) array")
        if not np.all(np.isfinite(xy)):
            raise ValueError("trace coordinates must be finite")
        self.xy = xy
        if t is not None:
            t = np.asarray(t, dtype=np.int64)
            if t.shape != (xy.shape[0],):
                raise ValueError("t must have one entry per point")
            if np.any(np.diff(t) < 0):
                raise ValueError("t must be non-decreasing within a trace")
        self.t = t
        self.degenerate = degenerate

    def __len__(self) -> int:
        return self.xy.shape[0]

    def __getitem__(self, i: int) -> Point:
        x, y = self.xy[i]
        return Point(float(x), float(y), None if self.t is None else int(self.t[i]))

    def __iter__(self) -> Iterator[Point]:
        return (self[i] for i in range(len(self)))

    def bbox(self) -> tuple[float, float, float, float]:
        lo = self.xy.min(axis=0)
        hi = self.xy.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])

    def __eq__(self, other) -> bool:
        if not isinstance(other, InkTrace):
            return NotImplemented
        if not np.array_equal(self.xy, other.xy):
            return False
        if (self.t is None) != (other.t is None):
            return False
        return self.t is None or np.array_equal(self.t, other.t)

    def __repr__(self) -> str:
        return f"InkTrace({len(self)} points{', degenerate' if self.degenerate else ''})"


@dataclass(frozen=True)
class StrokeSample:
    trace: InkTrace
    label: str
    writer: str
    session: int

    def __post_init__(self):
        if not self.label:
            raise ValueError("stroke label must be non-empty")


@dataclass(frozen=True)
class AksharaSample:
    traces: tuple[InkTrace, ...]
    label: str
    unicode: str
    writer: str
    session: int

    def __post_init__(self):
        if not 1 <= len(self.traces) <= MAX_AKSHARA_STROKES:
            raise ValueError(
                f"akshara must have 1..{MAX_AKSHARA_STROKES} strokes, got {len(self.traces)}"
            )
        if not self.label:
            raise ValueError("akshara label must be non-empty")


Sample = StrokeSample | AksharaSample


@dataclass
class Dataset:
    """Immutable-after-load collection of samples; split on the session field."""

    samples: list[Sample] = field(default_factory=list)

    @property
    def strokes(self) -> list[StrokeSample]:
        return [s for s in self.samples if isinstance(s, StrokeSample)]

    @property
    def aksharas(self) -> list[AksharaSample]:
        return [s for s in self.samples if isinstance(s, AksharaSample)]

    @property
    def sessions(self) -> set[int]:
        return {s.session for s in self.samples}

    @property
    def writers(self) -> set[str]:
        return {s.writer for s in self.samples}

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)


def _parse_stroke_array(raw, ctx: str) -> InkTrace:
    if not isinstance(raw, list) or len(raw) == 0:
        raise SchemaError(f"{ctx}: empty trace")
    xy = np.empty((len(raw), 2), dtype=np.float64)
    ts: list[int] = []
    for i, pt in enumerate(raw):
        if not isinstance(pt, list) or len(pt) not in (2, 3):
            raise SchemaError(f"{ctx}: point {i} must be [x, y] or [x, y, t]")
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in pt):
            raise SchemaError(f"{ctx}: point {i} has a non-numeric entry")
        xy[i] = pt[0], pt[1]
        if len(pt) == 3:
            ts.append(int(pt[2]))
    if ts and len(ts) != len(raw):
        raise SchemaError(f"{ctx}: field 'strokes' mixes timestamped and plain points")
    if not np.all(np.isfinite(xy)):
        raise SchemaError(f"{ctx}: field 'strokes' has a non-finite coordinate")
    try:
        return InkTrace(xy, np.asarray(ts, dtype=np.int64) if ts else None)
    except ValueError as e:
        raise SchemaError(f"{ctx}: {e}") from e


def parse_record(obj: dict, ctx: str = "<record>") -> Sample:
    """Parse one decoded record dict into a sample; strict about the schema."""
    if not isinstance(obj, dict):
        raise SchemaError(f"{ctx}: record must be an object")
    unknown = set(obj) - _RECORD_KEYS
    if unknown:
        raise SchemaError(f"{ctx}: unknown field '{sorted(unknown)[0]}'")
    for name in ("kind", "label", "writer", "session", "strokes"):
        if name not in obj:
            raise SchemaError(f"{ctx}: missing field '{name}'")
    kind = obj["kind"]
    if kind not in ("stroke", "akshara"):
        raise SchemaError(f"{ctx}: field 'kind' must be 'stroke' or 'akshara'")
    if not isinstance(obj["label"], str) or not obj["label"]:
        raise SchemaError(f"{ctx}: field 'label' must be a non-empty string")
    if not isinstance(obj["writer"], str):
        raise SchemaError(f"{ctx}: field 'writer' must be a string")
    if not isinstance(obj["session"], int) or isinstance(obj["session"], bool):
        raise SchemaError(f"{ctx}: field 'session' must be an integer")
    strokes = obj["strokes"]
    if not isinstance(strokes, list) or len(strokes) == 0:
        raise SchemaError(f"{ctx}: field 'strokes' must be a non-empty list")
    traces = [_parse_stroke_array(s, ctx) for s in strokes]

    if kind == "stroke":
        if "unicode" in obj:
            raise SchemaError(f"{ctx}: field 'unicode' is only valid on akshara records")
        if len(traces) != 1:
            raise SchemaError(f"{ctx}: stroke record must have exactly 1 stroke")
        return StrokeSample(traces[0], obj["label"], obj["writer"], obj["session"])

    if len(traces) > MAX_AKSHARA_STROKES:
        raise SchemaError(
            f"{ctx}: akshara record has {len(traces)} strokes (max {MAX_AKSHARA_STROKES})"
        )
    uni = obj.get("unicode", "")
    if not isinstance(uni, str):
        raise SchemaError(f"{ctx}: field 'unicode' must be a string")
    return AksharaSample(tuple(traces), obj["label"], uni, obj["writer"], obj["session"])


def _trace_to_array(trace: InkTrace) -> list:
    if trace.t is None:
        return [[float(x), float(y)] for x, y in trace.xy]
    return [[float(x), float(y), int(t)] for (x, y), t in zip(trace.xy, trace.t)]


def sample_to_record(sample: Sample) -> dict:
    if isinstance(sample, StrokeSample):
        return {
            "kind": "stroke",
            "label": sample.label,
            "writer": sample.writer,
            "session": sample.session,
            "strokes": [_trace_to_array(sample.trace)],
        }
    return {
        "kind": "akshara",
        "label": sample.label,
        "unicode": sample.unicode,
        "writer": sample.writer,
        "session": sample.session,
        "strokes": [_trace_to_array(t) for t in sample.traces],
    }


def load_dataset(path: str | Path) -> Dataset:
    """Load every ``.jsonl`` file under `path` (or `path` itself if a file).

    Files are read in sorted name order so dataset order is reproducible.
    Malformed records raise SchemaError with ``file:line`` context.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such dataset path: {path}")
    if path.is_dir():
        files = sorted(path.rglob("*.jsonl"))
        if not files:
            logger.warning("dataset directory %s has no .jsonl files", path)
    else:
        files = [path]
    samples: list[Sample] = []
    for f in files:
        with open(f, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                ctx = f"{f}:{lineno}"
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as e:
                    raise SchemaError(f"{ctx}: invalid record ({e.msg})") from e
                samples.append(parse_record(obj, ctx))
    return Dataset(samples)


def save_dataset(ds: Dataset, path: str | Path) -> None:
    """Write `ds` to a single .jsonl file; floats serialize at full precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for sample in ds.samples:
            fh.write(json.dumps(sample_to_record(sample), ensure_ascii=False) + "\n")


def split_by_session(ds: Dataset, train_sessions: set[int]) -> tuple[Dataset, Dataset]:
    """Partition by the session field alone; both halves must be non-empty."""
    missing = set(train_sessions) - ds.sessions
    if missing:
        raise ValueError(f"sessions not present in dataset: {sorted(missing)}")
    train = [s for s in ds.samples if s.session in train_sessions]
    test = [s for s in ds.samples if s.session not in train_sessions]
    if not train:
        raise ValueError("train split selects no samples")
    if not test:
        raise ValueError("test split is empty")
    return Dataset(train), Dataset(test)
