"""Tests for end-to-end stroke-sequence recognition."""

import json

import numpy as np
import pytest

from inkrec.classifier import ClassifierConfig, train_all
from inkrec.hmm import TrainConfig
from inkrec.ink import Dataset, InkTrace
from inkrec.recognizer import (
    RecognitionResult,
    recognize,
    result_to_json,
    result_to_payload,
)
from inkrec.rules import ConfusionAlternatives, Rule, RuleSet, expand_rules
from inkrec.synth import ShapeSpec, generate

REFINED = expand_rules(
    RuleSet([Rule(("st1", "st2", "st3"), "ak1", "ক")]),
    ConfusionAlternatives({"st1": {"st4": 8.3, "st61": 6.0, "st32": 5.5},
                           "st2": {"st144": 7.0}}),
    5.0,
)


class ScriptedClassifier:
    """Returns pre-baked rankings, one per classify call."""

    def __init__(self, rankings):
        self.rankings = list(rankings)
        self.calls = 0

    def classify(self, trace):
        ranked = self.rankings[self.calls % len(self.rankings)]
        self.calls += 1
        return list(ranked)


def traces(n):
    return [InkTrace(np.array([[0.0, 0.0], [1.0, float(i + 1)]])) for i in range(n)]


class TestTopOne:
    def test_composes_when_top1_in_rules(self):
        c = ScriptedClassifier([
            [("st1", -10.0), ("st9", -12.0)],
            [("st2", -11.0), ("st8", -12.0)],
            [("st3", -9.0), ("st7", -13.0)],
        ])
        r = recognize(c, REFINED, traces(3), k=1)
        assert r.akshara == "ak1"
        assert r.unicode == "ক"
        assert r.chosen == ("st1", "st2", "st3")
        assert r.logliks == (-10.0, -11.0, -9.0)
        assert r.total_loglik == -30.0

    def test_no_akshara_when_top1_absent(self):
        c = ScriptedClassifier([
            [("st1", -10.0)], [("st99", -11.0)], [("st3", -9.0)],
        ])
        r = recognize(c, REFINED, traces(3), k=1)
        assert r.akshara is None
        assert r.unicode is None
        assert r.chosen == ("st1", "st99", "st3")

    def test_akshara_nonnull_iff_top1_sequence_in_rules(self):
        rng = np.random.default_rng(42)
        pool = ["st1", "st2", "st3", "st4", "st144", "st61"]
        for _ in range(50):
            seq = [pool[i] for i in rng.integers(0, len(pool), 3)]
            c = ScriptedClassifier([[(lbl, -10.0)] for lbl in seq])
            r = recognize(c, REFINED, traces(3), k=1)
            assert (r.akshara is not None) == (REFINED.lookup(tuple(seq)) is not None)


class TestLattice:
    def scripted(self):
        return ScriptedClassifier([
            [("st1", -10.0), ("st9", -12.0)],
            [("st99", -11.0), ("st144", -11.5)],
            [("st3", -9.0), ("st7", -13.0)],
        ])

    def test_rank2_substitution_found_with_k2(self):
        r = recognize(self.scripted(), REFINED, traces(3), k=2)
        assert r.akshara == "ak1"
        assert r.chosen == ("st1", "st144", "st3")
        assert r.total_loglik == pytest.approx(-30.5)

    def test_same_input_with_k1_misses(self):
        r = recognize(self.scripted(), REFINED, traces(3), k=1)
        assert r.akshara is None

    def test_prefers_higher_total_when_both_compose(self):
        rules = RuleSet([
            Rule(("st1", "st144", "st3"), "akHigh"),
            Rule(("st9", "st99", "st3"), "akLow"),
        ])
        # totals: akHigh path -30.5, akLow path -32.0
        r = recognize(self.scripted(), rules, traces(3), k=2)
        assert r.akshara == "akHigh"

    def test_exhausted_lattice_reports_top1(self):
        rules = RuleSet([Rule(("zz", "zz"), "ak9")])
        c = ScriptedClassifier([
            [("a", -1.0), ("b", -2.0)],
            [("c", -1.0), ("d", -2.0)],
        ])
        r = recognize(c, rules, traces(2), k=2)
        assert r.akshara is None
        assert r.chosen == ("a", "c")

    def test_deterministic(self):
        a = recognize(self.scripted(), REFINED, traces(3), k=2)
        b = recognize(self.scripted(), REFINED, traces(3), k=2)
        assert a == b


class TestInputLimits:
    def test_overlong_input_gets_diagnostic(self):
        c = ScriptedClassifier([[("st1", -5.0)]] * 9)
        r = recognize(c, REFINED, traces(9), k=1)
        assert r.akshara is None
        assert "8-stroke cap" in r.diagnostic
        assert len(r.chosen) == 9

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError, match="at least one"):
            recognize(ScriptedClassifier([]), REFINED, [], k=1)

    def test_bad_k_rejected(self):
        with pytest.raises(ValueError, match="k"):
            recognize(ScriptedClassifier([]), REFINED, traces(1), k=0)

    def test_chosen_must_cover_all_strokes(self):
        with pytest.raises(ValueError, match="every input stroke"):
            RecognitionResult(
                ranked=((("a", -1.0),), (("b", -1.0),)),
                chosen=("a",), logliks=(-1.0,), akshara=None, unicode=None, k=1,
            )


class TestWithTrainedClassifier:
    def test_two_stroke_akshara_recognized(self):
        specs = [ShapeSpec("ln", "line", angle=0.2, noise=0.01),
                 ShapeSpec("lp", "loop", noise=0.01)]
        samples = []
        for spec in specs:
            samples.extend(generate(spec, 6, 1, 1, 42).samples)
        cfg = ClassifierConfig(n_states=3,
                               train=TrainConfig(max_iterations=4, target_mixtures=2))
        c = train_all(Dataset(samples), cfg)
        rules = RuleSet([Rule(("ln", "lp"), "akA", "অ")])
        test = [generate(s, 1, 1, 1, 7).samples[0].trace for s in specs]
        r = recognize(c, rules, test, k=2)
        assert r.chosen == ("ln", "lp")
        assert r.akshara == "akA"
        assert r.ranked[0][0][1] >= r.ranked[0][1][1]
        assert recognize(c, rules, test, k=1).akshara == "akA"


class TestSerialization:
    def result(self):
        c = ScriptedClassifier([
            [("st1", -10.0), ("st9", -12.5)],
            [("st2", -11.0), ("st8", -12.0)],
            [("st3", -9.0), ("st7", -13.0)],
        ])
        return recognize(c, REFINED, traces(3), k=2)

    def test_payload_shape(self):
        p = result_to_payload(self.result())
        assert list(p) == ["k", "strokes", "sequence", "sequence_logliks",
                           "total_loglik", "akshara", "diagnostic"]
        assert p["akshara"] == {"id": "ak1", "unicode": "ক"}
        assert p["sequence"] == ["st1", "st2", "st3"]
        assert [s["ranked"][0]["label"] for s in p["strokes"]] == ["st1", "st2", "st3"]
        assert p["diagnostic"] is None

    def test_json_is_canonical_and_unescaped(self):
        doc = result_to_json(self.result())
        assert result_to_json(self.result()) == doc
        assert "ক" in doc  # raw codepoint, not \u-escape
        assert "\n" not in doc
        parsed = json.loads(doc)
        assert parsed["total_loglik"] == -30.0

    def test_missing_akshara_serializes_null(self):
        c = ScriptedClassifier([[("zz", -1.0)]])
        doc = json.loads(result_to_json(recognize(c, REFINED, traces(1))))
        assert doc["akshara"] is None
