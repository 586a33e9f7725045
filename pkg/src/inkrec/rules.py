"""Stroke-combination rules: building, confusion expansion, and composition.

A RuleSet maps exact stroke-label sequences (length 1-8) to aksharas.  Base
rules come from annotated samples, keeping only combinations used by more
than a threshold percentage of writers.  A refined set adds every variant
reachable by substituting systematically-confused labels, so a recognizer
whose per-stroke output drifts into a known confusion still composes.
"""

from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .ink import MAX_AKSHARA_STROKES, AksharaSample
from .report import ConfusionMatrix

logger = logging.getLogger(__name__)

RULES_FORMAT = "inkrec-rules"
RULES_VERSION = 1


@dataclass(frozen=True)
class Substitution:
    position: int
    label: str


@dataclass(frozen=True)
class Provenance:
    """How an expanded sequence was derived from a base rule."""

    base_sequence: tuple[str, ...]
    substitutions: tuple[Substitution, ...]


@dataclass(frozen=True)
class Rule:
    sequence: tuple[str, ...]
    akshara: str
    unicode: str | None = None
    support: float = 1.0
    provenance: Provenance | None = None

    def __post_init__(self):
        object.__setattr__(self, "sequence", tuple(self.sequence))
        if not 1 <= len(self.sequence) <= MAX_AKSHARA_STROKES:
            raise ValueError(
                f"rule sequences must have 1..{MAX_AKSHARA_STROKES} labels"
            )
        if not self.akshara:
            raise ValueError("rule akshara must be non-empty")
        if not 0.0 < self.support <= 1.0:
            raise ValueError("support must be in (0, 1]")


class RuleSet:
    """Immutable exact-match tables, one per sequence length."""

    def __init__(self, rules: list[Rule], flag: str = "base"):
        if flag not in ("base", "refined"):
            raise ValueError("flag must be 'base' or 'refined'")
        self.flag = flag
        self._by_length: dict[int, dict[tuple[str, ...], Rule]] = {}
        for rule in rules:
            table = self._by_length.setdefault(len(rule.sequence), {})
            if rule.sequence in table:
                raise ValueError(f"duplicate rule for sequence {rule.sequence}")
            table[rule.sequence] = rule

    def __len__(self) -> int:
        return sum(len(t) for t in self._by_length.values())

    def __iter__(self):
        for length in sorted(self._by_length):
            yield from (self._by_length[length][k]
                        for k in sorted(self._by_length[length]))

    def lookup(self, sequence) -> Rule | None:
        return self._by_length.get(len(tuple(sequence)), {}).get(tuple(sequence))

    @property
    def lengths(self) -> list[int]:
        return sorted(self._by_length)


@dataclass(frozen=True)
class ConfusionAlternatives:
    """Per-label substitution candidates with their confusion rates."""

    alternatives: dict[str, dict[str, float]] = field(default_factory=dict)

    def __post_init__(self):
        for label, alts in self.alternatives.items():
            for alt, rate in alts.items():
                if alt == label:
                    raise ValueError(f"{label!r} cannot be its own alternative")
                if not 0.0 <= rate <= 100.0:
                    raise ValueError("confusion rates must be in [0, 100]")

    def for_label(self, label: str, rate_threshold: float) -> list[str]:
        alts = self.alternatives.get(label, {})
        return sorted(a for a, r in alts.items() if r >= rate_threshold)


def build_rules(samples: list[AksharaSample], stroke_labels_per_sample,
                writer_threshold: float = 5.0) -> RuleSet:
    """Base rules: per akshara, keep each observed stroke-label sequence iff
    strictly more than writer_threshold percent of that akshara's writers
    used it.
    """
    if len(samples) != len(stroke_labels_per_sample):
        raise ValueError(
            f"{len(samples)} samples but {len(stroke_labels_per_sample)} label sequences"
        )
    if writer_threshold < 0:
        raise ValueError("writer_threshold must be >= 0")
    writers_of: dict[str, set[str]] = {}
    combo_writers: dict[tuple[str, tuple[str, ...]], set[str]] = {}
    unicode_of: dict[str, str | None] = {}
    order: list[tuple[str, tuple[str, ...]]] = []
    for i, (sample, labels) in enumerate(zip(samples, stroke_labels_per_sample)):
        seq = tuple(labels)
        if len(seq) > MAX_AKSHARA_STROKES:
            logger.warning("sample %d (%s): %d labels exceed the %d-stroke cap, skipped",
                           i, sample.label, len(seq), MAX_AKSHARA_STROKES)
            continue
        if not seq:
            raise ValueError(f"sample {i} ({sample.label}): empty label sequence")
        writers_of.setdefault(sample.label, set()).add(sample.writer)
        key = (sample.label, seq)
        if key not in combo_writers:
            order.append(key)
        combo_writers.setdefault(key, set()).add(sample.writer)
        unicode_of.setdefault(sample.label, sample.unicode)

    rules: list[Rule] = []
    taken: dict[tuple[str, ...], str] = {}
    for akshara, seq in order:
        support = len(combo_writers[(akshara, seq)]) / len(writers_of[akshara])
        if 100.0 * support <= writer_threshold:
            continue
        if seq in taken:
            logger.warning("sequence %s already claimed by %s; dropping rule for %s",
                           seq, taken[seq], akshara)
            continue
        taken[seq] = akshara
        rules.append(Rule(seq, akshara, unicode_of[akshara], support))
    return RuleSet(rules, "base")


def alternatives_from_confusion(cm: ConfusionMatrix,
                                rate_threshold: float = 5.0) -> ConfusionAlternatives:
    """j is an alternative of i iff cm[i][j] >= rate_threshold and i != j."""
    if rate_threshold <= 0:
        raise ValueError("rate_threshold must be positive")
    alts: dict[str, dict[str, float]] = {}
    pct = cm.percentages
    for i, truth in enumerate(cm.labels):
        row = {cm.labels[j]: float(pct[i, j])
               for j in range(len(cm.labels))
               if j != i and pct[i, j] >= rate_threshold}
        if row:
            alts[truth] = row
    return ConfusionAlternatives(alts)


def expand_rules(base: RuleSet, alts: ConfusionAlternatives,
                 rate_threshold: float = 5.0) -> RuleSet:
    """Refined set: base rules plus every confusion-substituted variant.

    Substitution candidates per position are the original label plus its
    alternatives at or above rate_threshold; the Cartesian product over
    positions maps to the base rule's akshara.  Base rules win collisions,
    then first-registered expansion wins; losers are logged.
    """
    if rate_threshold <= 0:
        raise ValueError("rate_threshold must be positive")
    expanded: dict[tuple[str, ...], Rule] = {}
    for rule in base:
        expanded[rule.sequence] = Rule(
            rule.sequence, rule.akshara, rule.unicode, rule.support
        )
    for rule in base:
        choices = [[label] + alts.for_label(label, rate_threshold)
                   for label in rule.sequence]
        for combo in itertools.product(*choices):
            if combo == rule.sequence:
                continue
            if combo in expanded:
                holder = expanded[combo]
                if holder.akshara != rule.akshara:
                    logger.warning(
                        "expanded sequence %s for %s collides with existing rule "
                        "for %s; keeping the first", combo, rule.akshara, holder.akshara,
                    )
                continue
            subs = tuple(Substitution(i, lbl)
                         for i, lbl in enumerate(combo) if lbl != rule.sequence[i])
            expanded[combo] = Rule(
                combo, rule.akshara, rule.unicode, rule.support,
                Provenance(rule.sequence, subs),
            )
    return RuleSet(list(expanded.values()), "refined")


def compose(rules: RuleSet, recognized) -> Rule | None:
    """Exact lookup of a recognized label sequence; absence is None."""
    seq = tuple(recognized)
    if not seq:
        raise ValueError("cannot compose an empty label sequence")
    if len(seq) > MAX_AKSHARA_STROKES:
        logger.warning("sequence of %d labels exceeds the %d-stroke cap",
                       len(seq), MAX_AKSHARA_STROKES)
        return None
    return rules.lookup(seq)


# --- rule file I/O ---------------------------------------------------------

def save_rules(rules: RuleSet, path: str | Path) -> None:
    doc = {
        "format": RULES_FORMAT,
        "version": RULES_VERSION,
        "flag": rules.flag,
        "rules": [
            {
                "sequence": list(r.sequence),
                "akshara": r.akshara,
                "unicode": r.unicode,
                "support": r.support,
                "provenance": None if r.provenance is None else {
                    "base_sequence": list(r.provenance.base_sequence),
                    "substitutions": [[s.position, s.label]
                                      for s in r.provenance.substitutions],
                },
            }
            for r in rules
        ],
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def load_rules(path: str | Path) -> RuleSet:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise ValueError(f"{path}: not a valid rules file ({e.msg})") from e
    if not isinstance(doc, dict) or doc.get("format") != RULES_FORMAT:
        raise ValueError(f"{path}: not an {RULES_FORMAT} document")
    if doc.get("version") != RULES_VERSION:
        raise ValueError(f"{path}: unsupported rules version {doc.get('version')!r}")
    rules = []
    try:
        for entry in doc["rules"]:
            prov = entry.get("provenance")
            rules.append(Rule(
                tuple(entry["sequence"]),
                entry["akshara"],
                entry.get("unicode"),
                entry["support"],
                None if prov is None else Provenance(
                    tuple(prov["base_sequence"]),
                    tuple(Substitution(p, lbl) for p, lbl in prov["substitutions"]),
                ),
            ))
        return RuleSet(rules, doc["flag"])
    except (KeyError, TypeError) as e:
        raise ValueError(f"{path}: malformed rules document ({e})") from e
