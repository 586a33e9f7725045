"""End-to-end akshara recognition: per-stroke classification plus rule lookup.

With k = 1 the top-1 label sequence either composes to an akshara or the
result carries no akshara at all.  With k > 1 a best-first search walks the
k-labels-per-stroke lattice in descending total log-likelihood until some
sequence composes; the chosen sequence is recorded either way.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass

from .classifier import StrokeClassifier
from .ink import MAX_AKSHARA_STROKES, InkTrace
from .rules import RuleSet, compose


@dataclass(frozen=True)
class RecognitionResult:
    ranked: tuple[tuple[tuple[str, float], ...], ...]  # per stroke, top-k
    chosen: tuple[str, ...]
    logliks: tuple[float, ...]  # per stroke, for the chosen labels
    akshara: str | None
    unicode: str | None
    k: int
    diagnostic: str | None = None

    def __post_init__(self):
        if len(self.chosen) != len(self.ranked) or len(self.logliks) != len(self.ranked):
            raise ValueError("chosen sequence must cover every input stroke")
        if self.k < 1:
            raise ValueError("k must be >= 1")

    @property
    def total_loglik(self) -> float:
        return float(sum(self.logliks))


def _best_first_search(topk: list[list[tuple[str, float]]], rules: RuleSet):
    """Visit label combinations in descending total log-likelihood order.

    Returns the first index vector whose sequence composes, or None.  Ties
    on total break on the index vector itself, so the order is deterministic.
    """
    counts = [len(r) for r in topk]

    def total(idx):
        return sum(topk[i][j][1] for i, j in enumerate(idx))

    start = (0,) * len(topk)
    heap = [(-total(start), start)]
    seen = {start}
    while heap:
        _, idx = heapq.heappop(heap)
        seq = tuple(topk[i][j][0] for i, j in enumerate(idx))
        if compose(rules, seq) is not None:
            return idx
        for i in range(len(idx)):
            if idx[i] + 1 < counts[i]:
                nxt = idx[:i] + (idx[i] + 1,) + idx[i + 1:]
                if nxt not in seen:
                    seen.add(nxt)
                    heapq.heappush(heap, (-total(nxt), nxt))
    return None


def recognize(c: StrokeClassifier, rules: RuleSet, traces: list[InkTrace],
              k: int = 1) -> RecognitionResult:
    if k < 1:
        raise ValueError("k must be >= 1")
    if not traces:
        raise ValueError("need at least one stroke")
    ranked = [c.classify(t) for t in traces]
    topk = [r[:k] for r in ranked]
    eff_k = min(k, max(len(r) for r in topk))

    def build(idx, rule, diagnostic=None):
        chosen = tuple(topk[i][j][0] for i, j in enumerate(idx))
        lls = tuple(topk[i][j][1] for i, j in enumerate(idx))
        return RecognitionResult(
            ranked=tuple(tuple(r) for r in topk),
            chosen=chosen,
            logliks=lls,
            akshara=rule.akshara if rule else None,
            unicode=rule.unicode if rule else None,
            k=k,
            diagnostic=diagnostic,
        )

    top1 = (0,) * len(traces)
    if len(traces) > MAX_AKSHARA_STROKES:
        return build(top1, None,
                     f"input has {len(traces)} strokes, exceeding the "
                     f"{MAX_AKSHARA_STROKES}-stroke cap")
    if eff_k == 1:
        return build(top1, compose(rules, tuple(topk[i][0][0] for i in range(len(topk)))))
    hit = _best_first_search(topk, rules)
    if hit is None:
        return build(top1, None)
    return build(hit, compose(rules, tuple(topk[i][j][0] for i, j in enumerate(hit))))


def result_to_payload(r: RecognitionResult) -> dict:
    """Plain-dict form of a result with a fixed key order."""
    return {
        "k": r.k,
        "strokes": [
            {"ranked": [{"label": lbl, "loglik": ll} for lbl, ll in stroke]}
            for stroke in r.ranked
        ],
        "sequence": list(r.chosen),
        "sequence_logliks": list(r.logliks),
        "total_loglik": r.total_loglik,
        "akshara": None if r.akshara is None else {"id": r.akshara, "unicode": r.unicode},
        "diagnostic": r.diagnostic,
    }


def result_to_json(r: RecognitionResult) -> str:
    """Canonical single-line JSON; every emitter must use exactly this."""
    return json.dumps(result_to_payload(r), ensure_ascii=False, separators=(", ", ": "))
