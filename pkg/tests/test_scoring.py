import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from sampleselect import _kernels_py
from sampleselect.errors import DegenerateCandidateError, ScorerError
from sampleselect.scoring import (
    KERNEL_BACKEND,
    ExactMatchEntailment,
    agreement_score,
    mean_logprob,
    overlap_score,
    round_overlap_scores,
    round_unigram_nll_scores,
    unigram_nll_score,
)

# --- independent oracles ------------------------------------------------------


def brute_force_overlap(i, samples):
    """Triple loop straight over the definition: (1/m_i) sum_j sum_k [w_i^j in s_k]."""
    total = 0
    for token in samples[i]:
        for sample in samples:
            if token in sample:
                total += 1
    return total / len(samples[i])


def brute_force_overlap_fraction(i, samples, include_self=True):
    total = 0
    for token in samples[i]:
        for k, sample in enumerate(samples):
            if not include_self and k == i:
                continue
            if token in sample:
                total += 1
    return Fraction(total, len(samples[i]))


def direct_unigram_nll(i, samples):
    """Direct evaluation of the smoothed-unigram formula, independently of the kernels."""
    vocab = set()
    for sample in samples:
        vocab.update(sample)
    others = [token for k, sample in enumerate(samples) if k != i for token in sample]
    denom = len(others) + len(vocab)
    values = [
        -math.log((sum(1 for w in others if w == token) + 1) / denom)
        for token in samples[i]
    ]
    return sum(values) / len(values)


def random_instance(rng, max_n=8, vocab=20, max_len=12, min_len=1):
    n = rng.randint(2, max_n)
    alphabet = [f"t{v}" for v in range(vocab)]
    return [
        [rng.choice(alphabet) for _ in range(rng.randint(min_len, max_len))]
        for _ in range(n)
    ]


# --- overlap score ------------------------------------------------------------


class TestOverlapScore:
    def test_worked_example(self):
        samples = [["the", "cat", "sat"], ["the", "cat", "ran"], ["a", "dog", "sat"]]
        assert overlap_score(0, samples) == 2.0
        assert overlap_score(1, samples) == 5 / 3
        assert overlap_score(2, samples) == 4 / 3

    def test_single_sample_scores_one(self):
        assert overlap_score(0, [["only", "sample"]]) == 1.0

    def test_identical_samples_score_n(self):
        samples = [["a", "b"]] * 4
        assert [overlap_score(i, samples) for i in range(4)] == [4.0] * 4

    def test_empty_sample_is_degenerate(self):
        with pytest.raises(DegenerateCandidateError):
            overlap_score(1, [["a"], []])

    def test_index_out_of_range(self):
        with pytest.raises(IndexError):
            overlap_score(2, [["a"], ["b"]])

    def test_matches_brute_force_oracle(self):
        rng = random.Random(2024)
        for _ in range(300):
            samples = random_instance(rng)
            scores = round_overlap_scores(samples)
            for i in range(len(samples)):
                assert scores[i] == brute_force_overlap(i, samples)

    def test_self_term_adds_exactly_one(self):
        rng = random.Random(99)
        for _ in range(200):
            samples = random_instance(rng)
            with_self = [brute_force_overlap_fraction(i, samples, True) for i in range(len(samples))]
            without = [brute_force_overlap_fraction(i, samples, False) for i in range(len(samples))]
            for a, b in zip(with_self, without):
                assert a - b == 1
            assert max(range(len(samples)), key=lambda i: (with_self[i], -i)) == max(
                range(len(samples)), key=lambda i: (without[i], -i)
            )
            # the implementation realizes the with-self reading
            impl = round_overlap_scores(samples)
            for i, frac in enumerate(with_self):
                assert impl[i] == frac.numerator / frac.denominator

    def test_permutation_equivariance(self):
        rng = random.Random(5)
        samples = random_instance(rng)
        order = list(range(len(samples)))
        rng.shuffle(order)
        permuted = [samples[i] for i in order]
        original = round_overlap_scores(samples)
        shuffled = round_overlap_scores(permuted)
        for new_pos, old_pos in enumerate(order):
            assert shuffled[new_pos] == original[old_pos]

    def test_duplicating_token_in_other_sample_is_invariant(self):
        samples = [["a", "b", "c"], ["a", "x"], ["b", "y"]]
        duplicated = [["a", "b", "c"], ["a", "a", "a", "x"], ["b", "y"]]
        assert overlap_score(0, samples) == overlap_score(0, duplicated)

    def test_appending_to_scored_sample_changes_by_documented_amount(self):
        samples = [["a", "b"], ["a", "c"], ["d", "e"]]
        extended = [["a", "b", "c"], ["a", "c"], ["d", "e"]]
        # new numerator adds the count of samples containing "c" after the append
        assert overlap_score(0, extended) == brute_force_overlap(0, extended)
        assert overlap_score(0, extended) == (2 + 1 + 2) / 3


# --- unigram NLL ----------------------------------------------------------------


class TestUnigramNll:
    def test_identical_samples_hit_the_floor(self):
        samples = [["a", "b"]] * 3
        score = unigram_nll_score(0, samples)
        # every token occurs twice among the 4 other tokens; p = 3/6
        assert score == pytest.approx(-math.log(3 / 6), abs=1e-12)
        # no other two-token sample over this vocabulary can score lower
        for variant in (["a", "x"], ["x", "y"], ["b", "b"]):
            trial = [variant, ["a", "b"], ["a", "b"]]
            assert unigram_nll_score(0, trial) >= score

    def test_worked_comparison(self):
        samples = [["the", "cat", "sat"], ["the", "cat", "ran"], ["a", "dog", "sat"]]
        assert unigram_nll_score(0, samples) < unigram_nll_score(2, samples)
        for i in range(3):
            assert unigram_nll_score(i, samples) == pytest.approx(
                direct_unigram_nll(i, samples), abs=1e-12
            )

    def test_unique_token_scores_worse_than_shared(self):
        base = [["x", "shared"], ["shared", "other"], ["shared", "third"]]
        with_unique = [["x", "unique1234"], ["shared", "other"], ["shared", "third"]]
        assert unigram_nll_score(0, with_unique) > unigram_nll_score(0, base)

    def test_matches_direct_formula_on_fuzz(self):
        rng = random.Random(7)
        for _ in range(200):
            samples = random_instance(rng, max_n=6, vocab=10, max_len=8)
            scores = round_unigram_nll_scores(samples)
            for i in range(len(samples)):
                assert scores[i] == pytest.approx(direct_unigram_nll(i, samples), abs=1e-12)

    def test_needs_two_samples(self):
        with pytest.raises(ValueError):
            unigram_nll_score(0, [["a"]])

    def test_empty_sample_is_degenerate(self):
        with pytest.raises(DegenerateCandidateError):
            unigram_nll_score(1, [["a"], []])

    def test_max_aggregate(self):
        samples = [["a", "zzz"], ["a", "b"], ["a", "b"]]
        mean_score = unigram_nll_score(0, samples, aggregate="mean")
        max_score = unigram_nll_score(0, samples, aggregate="max")
        assert max_score >= mean_score
        others = ["a", "b", "a", "b"]
        denom = len(others) + 3
        assert max_score == pytest.approx(-math.log(1 / denom), abs=1e-12)

    def test_unknown_aggregate(self):
        with pytest.raises(ValueError):
            round_unigram_nll_scores([["a"], ["b"]], aggregate="median")


# --- kernel parity ---------------------------------------------------------------


@pytest.mark.skipif(KERNEL_BACKEND != "cython", reason="compiled kernels not built")
def test_pure_and_compiled_kernels_agree():
    from array import array

    from sampleselect import _kernels

    rng = random.Random(11)
    for _ in range(100):
        samples = random_instance(rng, max_n=7, vocab=15, max_len=10, min_len=0)
        vocab: dict[str, int] = {}
        flat = array("i")
        offsets = array("i", [0])
        for sample in samples:
            for token in sample:
                flat.append(vocab.setdefault(token, len(vocab)))
            offsets.append(len(flat))
        if not vocab:
            continue
        assert _kernels.overlap_numerators(flat, offsets, len(vocab)) == list(
            _kernels_py.overlap_numerators(flat, offsets, len(vocab))
        )
        c_sums, c_maxes = _kernels.unigram_nll_stats(flat, offsets, len(vocab))
        p_sums, p_maxes = _kernels_py.unigram_nll_stats(flat, offsets, len(vocab))
        assert c_sums == pytest.approx(p_sums, abs=1e-12)
        assert c_maxes == pytest.approx(p_maxes, abs=1e-12)


# --- mean logprob ----------------------------------------------------------------


class TestMeanLogprob:
    def test_constant_list(self):
        assert mean_logprob([-0.1, -0.1]) == -0.1

    def test_arithmetic(self):
        assert mean_logprob([-1.0, -3.0]) == -2.0

    def test_argmax_selection(self):
        responses = [[-0.5], [-0.1], [-0.9]]
        best = max(range(3), key=lambda i: mean_logprob(responses[i]))
        assert best == 1

    def test_empty_is_degenerate(self):
        with pytest.raises(DegenerateCandidateError):
            mean_logprob([])

    @given(st.lists(st.floats(min_value=-50, max_value=0), min_size=1, max_size=20), st.randoms())
    def test_permutation_invariant(self, values, rng):
        shuffled = list(values)
        rng.shuffle(shuffled)
        assert mean_logprob(values) == mean_logprob(shuffled)


# --- agreement -------------------------------------------------------------------


class _Boom(ExactMatchEntailment):
    name = "boom"

    def entails(self, premise, hypothesis):
        raise RuntimeError("nli backend down")


class TestAgreementScore:
    def test_exact_match_mock(self):
        responses = ["A", "A", "B"]
        predicate = ExactMatchEntailment()
        assert [agreement_score(i, responses, predicate) for i in range(3)] == [1, 1, 0]

    def test_all_identical(self):
        responses = ["same"] * 4
        predicate = ExactMatchEntailment()
        assert [agreement_score(i, responses, predicate) for i in range(4)] == [3, 3, 3, 3]

    def test_all_distinct_ties_to_lowest_index(self):
        responses = ["a", "b", "c"]
        predicate = ExactMatchEntailment()
        scores = [agreement_score(i, responses, predicate) for i in range(3)]
        assert scores == [0, 0, 0]
        assert max(range(3), key=lambda i: (scores[i], -i)) == 0

    def test_predicate_failure_becomes_scorer_error(self):
        with pytest.raises(ScorerError):
            agreement_score(0, ["a", "b"], _Boom())
