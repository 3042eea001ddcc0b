import random
import string
from collections import Counter

import pytest
from hypothesis import given, strategies as st

from sampleselect.errors import UsageError
from sampleselect.evaluation import EvalRecord, aggregate_report, rouge1_f1, summary_length_tokens
from sampleselect.textproc import word_tokens


def reference_f1(candidate: str, reference: str) -> float:
    """Independent textbook implementation: clipped counts, then 2PR/(P+R)."""
    cand = word_tokens(candidate)
    ref = word_tokens(reference)
    if not cand or not ref:
        return 0.0
    match = sum(min(Counter(cand)[w], Counter(ref)[w]) for w in set(cand))
    if match == 0:
        return 0.0
    precision = match / len(cand)
    recall = match / len(ref)
    return 2 * precision * recall / (precision + recall)


class TestRouge1F1:
    def test_identical_texts(self):
        assert rouge1_f1("The cat sat.", "the cat sat") == 1.0

    def test_worked_example(self):
        value = rouge1_f1("the cat", "the cat sat")
        assert value == 0.8  # P=1, R=2/3, F1=0.8 exactly

    def test_disjoint(self):
        assert rouge1_f1("alpha beta", "gamma delta") == 0.0

    def test_empty_sides(self):
        assert rouge1_f1("", "reference") == 0.0
        assert rouge1_f1("candidate", "") == 0.0
        assert rouge1_f1("", "") == 0.0

    def test_clipping(self):
        # "the" appears twice in the candidate but once in the reference
        assert rouge1_f1("the the", "the cat") == 2 * 1 / (2 + 2)

    def test_matches_reference_implementation_on_fuzz(self):
        rng = random.Random(42)
        words = ["the", "cat", "sat", "dog", "ran", "a", "on", "mat", "x1", "y2"]
        for _ in range(500):
            candidate = " ".join(rng.choices(words, k=rng.randint(0, 12)))
            reference = " ".join(rng.choices(words, k=rng.randint(0, 12)))
            assert rouge1_f1(candidate, reference) == pytest.approx(
                reference_f1(candidate, reference), abs=1e-12
            )

    @given(st.text(alphabet=string.ascii_lowercase + " ", max_size=60),
           st.text(alphabet=string.ascii_lowercase + " ", max_size=60))
    def test_symmetric_and_bounded(self, a, b):
        value = rouge1_f1(a, b)
        assert 0.0 <= value <= 1.0
        assert value == rouge1_f1(b, a)
        if value == 1.0:
            assert Counter(word_tokens(a)) == Counter(word_tokens(b))

    def test_one_iff_equal_multisets(self):
        assert rouge1_f1("b a a", "a b a") == 1.0
        assert rouge1_f1("b a a", "a b b") < 1.0


class TestSummaryLength:
    def test_empty(self):
        assert summary_length_tokens("") == 0

    def test_simple(self):
        assert summary_length_tokens("The cat sat.") == 3

    def test_additive_over_concatenation(self):
        a, b = "First bit here.", "And a second piece."
        assert summary_length_tokens(a + " " + b) == summary_length_tokens(a) + summary_length_tokens(b)


class TestAggregateReport:
    def test_single_record(self):
        record = EvalRecord("d1", 0.5, 10)
        report = aggregate_report([record], method="greedy", stop_reasons={"sample_ended": 1})
        assert report == {
            "method": "greedy",
            "n_docs": 1,
            "rouge1_f1_mean": 0.5,
            "rouge1_f1_count": 1,
            "length_mean": 10.0,
            "stop_reasons": {"sample_ended": 1},
        }

    def test_mean_of_two(self):
        records = [EvalRecord("a", 0.2, 4), EvalRecord("b", 0.4, 8)]
        report = aggregate_report(records, method="beam")
        assert report["rouge1_f1_mean"] == pytest.approx(0.3)
        assert report["length_mean"] == 6.0

    def test_missing_references_skipped_with_count(self):
        records = [EvalRecord("a", 0.2, 4), EvalRecord("b", None, 8), EvalRecord("c", 0.6, 2)]
        report = aggregate_report(records, method="nucleus")
        assert report["rouge1_f1_mean"] == pytest.approx(0.4)
        assert report["rouge1_f1_count"] == 2
        assert report["n_docs"] == 3

    def test_no_references_at_all(self):
        report = aggregate_report([EvalRecord("a", None, 5)], method="x")
        assert report["rouge1_f1_mean"] is None
        assert report["rouge1_f1_count"] == 0

    def test_empty_is_usage_error(self):
        with pytest.raises(UsageError):
            aggregate_report([], method="greedy")
