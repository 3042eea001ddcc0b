"""Candidate scoring: token-overlap consistency, unigram negative log-likelihood,
mean sequence log-probability, and entailment-based agreement.

The round-level overlap and NLL computations run on compiled kernels when the
extension built, and on pure-Python twins otherwise. Set the environment
variable SAMPLESELECT_PURE_KERNELS=1 before import to force the pure path.
All scorers are pure functions and thread-safe.
"""

from __future__ import annotations

import abc
import math
import os
from array import array
from dataclasses import dataclass
from typing import Sequence

import requests

from sampleselect.errors import DegenerateCandidateError, ScorerError

if os.environ.get("SAMPLESELECT_PURE_KERNELS"):
    from sampleselect import _kernels_py as _kernels
else:
    try:
        from sampleselect import _kernels  # type: ignore[no-redef]
    except ImportError:
        from sampleselect import _kernels_py as _kernels

#: Which kernel implementation this process selected: "cython" or "python".
KERNEL_BACKEND: str = _kernels.BACKEND

__all__ = [
    "KERNEL_BACKEND",
    "EntailmentPredicate",
    "ExactMatchEntailment",
    "RemoteEntailment",
    "SampleCandidate",
    "ScoredSample",
    "agreement_score",
    "mean_logprob",
    "overlap_score",
    "round_overlap_scores",
    "round_unigram_nll_scores",
    "unigram_nll_score",
]


@dataclass(frozen=True)
class SampleCandidate:
    """One sampled sentence continuation (or whole response, for rerankers)."""

    text: str
    tokens: tuple[str, ...]
    ended: bool
    token_logprobs: tuple[float, ...] | None = None


@dataclass(frozen=True)
class ScoredSample:
    """A candidate with its selection score; filtered candidates carry score 0.0
    and never win selection."""

    candidate: SampleCandidate
    score: float
    filtered: bool


def _encode(samples: Sequence[Sequence[str]]) -> tuple[array, array, int]:
    """Map a round's token lists onto dense integer ids for the kernels."""
    vocab: dict[str, int] = {}
    flat = array("i")
    offsets = array("i", [0])
    for sample in samples:
        for token in sample:
            flat.append(vocab.setdefault(token, len(vocab)))
        offsets.append(len(flat))
    return flat, offsets, len(vocab)


def round_overlap_scores(samples: Sequence[Sequence[str]]) -> list[float | None]:
    """Token-overlap score for every sample of a round in one kernel pass.

    Score of sample i: the average, over its tokens, of the number of samples
    whose token set contains that token — the sample itself included, so every
    token contributes at least 1. Token repetition inside a reference sample is
    ignored (set membership). Empty samples score None; callers treat those as
    filtered.
    """
    flat, offsets, vocab_size = _encode(samples)
    if vocab_size == 0:
        return [None] * len(samples)
    numerators = _kernels.overlap_numerators(flat, offsets, vocab_size)
    scores: list[float | None] = []
    for i in range(len(samples)):
        m = offsets[i + 1] - offsets[i]
        scores.append(numerators[i] / m if m else None)
    return scores


def overlap_score(i: int, samples: Sequence[Sequence[str]]) -> float:
    """Token-overlap consistency score of sample ``i`` within its round.

    Raises DegenerateCandidateError when sample i has no tokens.
    """
    if not 0 <= i < len(samples):
        raise IndexError(f"sample index {i} out of range for {len(samples)} samples")
    score = round_overlap_scores(samples)[i]
    if score is None:
        raise DegenerateCandidateError(f"sample {i} has no tokens")
    return score


def round_unigram_nll_scores(
    samples: Sequence[Sequence[str]], aggregate: str = "mean"
) -> list[float | None]:
    """Unigram hallucination score for every sample of a round; lower is better.

    For sample i, a unigram model is built from the concatenated tokens of all
    other samples with add-one smoothing over the round vocabulary (the union
    of all samples' tokens); the score aggregates -ln p over sample i's tokens
    by mean (default) or max. Empty samples score None.
    """
    if aggregate not in ("mean", "max"):
        raise ValueError(f"unknown aggregate {aggregate!r}; expected 'mean' or 'max'")
    if len(samples) < 2:
        raise ValueError("unigram scoring needs at least two samples")
    flat, offsets, vocab_size = _encode(samples)
    if vocab_size == 0:
        return [None] * len(samples)
    sums, maxes = _kernels.unigram_nll_stats(flat, offsets, vocab_size)
    scores: list[float | None] = []
    for i in range(len(samples)):
        m = offsets[i + 1] - offsets[i]
        if m == 0:
            scores.append(None)
        else:
            scores.append(sums[i] / m if aggregate == "mean" else maxes[i])
    return scores


def unigram_nll_score(
    i: int, samples: Sequence[Sequence[str]], aggregate: str = "mean"
) -> float:
    """Unigram NLL score of sample ``i`` against the other samples of its round."""
    if not 0 <= i < len(samples):
        raise IndexError(f"sample index {i} out of range for {len(samples)} samples")
    score = round_unigram_nll_scores(samples, aggregate=aggregate)[i]
    if score is None:
        raise DegenerateCandidateError(f"sample {i} has no tokens")
    return score


def mean_logprob(token_logprobs: Sequence[float]) -> float:
    """Arithmetic mean of per-token log-probabilities (exact summation, so the
    result is invariant under permutation of the list)."""
    if not token_logprobs:
        raise DegenerateCandidateError("cannot average an empty log-probability list")
    return math.fsum(token_logprobs) / len(token_logprobs)


class EntailmentPredicate(abc.ABC):
    """Deterministic judgment of whether a premise entails a hypothesis."""

    name: str = "entailment"

    @abc.abstractmethod
    def entails(self, premise: str, hypothesis: str) -> bool:
        ...


class ExactMatchEntailment(EntailmentPredicate):
    """Mock predicate: entailment iff the two strings are identical."""

    name = "exact_match"

    def entails(self, premise: str, hypothesis: str) -> bool:
        return premise == hypothesis


class RemoteEntailment(EntailmentPredicate):
    """HTTP-backed predicate: POST /entail {"premise", "hypothesis"} -> {"entails": bool}."""

    def __init__(self, endpoint: str, *, timeout: float = 30.0):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.name = f"remote({self.endpoint})"
        self._session = requests.Session()

    def entails(self, premise: str, hypothesis: str) -> bool:
        response = self._session.post(
            f"{self.endpoint}/entail",
            json={"premise": premise, "hypothesis": hypothesis},
            timeout=self.timeout,
        )
        response.raise_for_status()
        return bool(response.json()["entails"])


def agreement_score(
    i: int, responses: Sequence[str], predicate: EntailmentPredicate
) -> int:
    """Number of other responses that bidirectionally entail response ``i``.

    A predicate failure aborts the whole ranking as ScorerError.
    """
    if not 0 <= i < len(responses):
        raise IndexError(f"response index {i} out of range for {len(responses)} responses")
    score = 0
    for k, other in enumerate(responses):
        if k == i:
            continue
        try:
            if predicate.entails(responses[i], other) and predicate.entails(other, responses[i]):
                score += 1
        except Exception as exc:
            raise ScorerError(
                f"entailment predicate {predicate.name!r} failed: {exc}"
            ) from exc
    return score
