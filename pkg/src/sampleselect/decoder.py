"""Decoding drivers.

sample_and_select is the main loop: per sentence, draw n continuations, filter
ungrammatical ones, score the rest by token overlap with the whole round, keep
the argmax, append it to the output and the prompt, and repeat. The other
drivers share its machinery: independent_select votes per sentence position
over whole responses drawn up front (no re-conditioning), selfcheck_select
swaps the overlap argmax for a unigram-NLL argmin, rerank_responses ranks n
whole responses (by mean log-probability or entailment agreement) and keeps
one, and baseline_decode runs plain greedy / nucleus / beam decoding.

Every selection tie breaks toward the lowest candidate index, and every
backend request carries a seed derived from (run seed, document id, round,
sample index), so results are reproducible on deterministic backends no matter
how calls are scheduled.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Sequence

from sampleselect.backends.base import (
    CompletionRequest,
    DistributionBackend,
    SamplingBackend,
    derive_seed,
)
from sampleselect.backends.decode import beam_search, greedy_decode
from sampleselect.errors import ConfigurationError, RunError
from sampleselect.grammar import ParseProvider, is_grammatical
from sampleselect.scoring import (
    EntailmentPredicate,
    ExactMatchEntailment,
    SampleCandidate,
    ScoredSample,
    agreement_score,
    mean_logprob,
    round_overlap_scores,
    round_unigram_nll_scores,
)
from sampleselect.textproc import split_sentences, word_tokens

__all__ = [
    "DEFAULT_PROMPT_TEMPLATE",
    "GenerationConfig",
    "Method",
    "RoundTrace",
    "StopReason",
    "SummaryTrace",
    "baseline_decode",
    "generate",
    "independent_select",
    "rerank_responses",
    "sample_and_select",
    "selfcheck_select",
]

DEFAULT_PROMPT_TEMPLATE = "Summarize the following article:\n{article}\nSummary:"


class Method(str, enum.Enum):
    SAMPLE_SELECT = "sample_select"
    INDEPENDENT = "independent"
    SELFCHECK_SELECT = "selfcheck_select"
    PCRR = "pcrr"
    SCRR = "scrr"
    GREEDY = "greedy"
    NUCLEUS = "nucleus"
    BEAM = "beam"


class StopReason(str, enum.Enum):
    SAMPLE_ENDED = "sample_ended"
    ABORTED_ALL_FILTERED = "aborted_all_filtered"
    MAX_SENTENCES = "max_sentences"


@dataclass(frozen=True)
class GenerationConfig:
    """Knobs of one generation run.

    The prompt template must contain "{article}" exactly once. For the
    voting methods, n is the number of samples per round; for rerankers it is
    the number of whole responses drawn.
    """

    method: Method = Method.SAMPLE_SELECT
    n: int = 5
    top_p: float = 0.9
    temperature: float = 1.0
    max_sentence_tokens: int = 128
    max_sentences: int = 20
    seed: int = 0
    beams: int = 5
    prompt_template: str = DEFAULT_PROMPT_TEMPLATE
    sentence_joiner: str = " "
    selfcheck_aggregate: str = "mean"

    def __post_init__(self):
        if not isinstance(self.method, Method):
            object.__setattr__(self, "method", Method(self.method))
        if self.n < 1:
            raise ConfigurationError(f"n must be >= 1, got {self.n}")
        if not 0.0 < self.top_p <= 1.0:
            raise ConfigurationError(f"top_p must be in (0, 1], got {self.top_p}")
        if self.temperature < 0.0:
            raise ConfigurationError(f"temperature must be >= 0, got {self.temperature}")
        if self.max_sentence_tokens < 1:
            raise ConfigurationError("max_sentence_tokens must be >= 1")
        if self.max_sentences < 1:
            raise ConfigurationError("max_sentences must be >= 1")
        if self.beams < 1:
            raise ConfigurationError("beams must be >= 1")
        if self.prompt_template.count("{article}") != 1:
            raise ConfigurationError(
                "prompt_template must contain the placeholder '{article}' exactly once"
            )
        if self.selfcheck_aggregate not in ("mean", "max"):
            raise ConfigurationError(
                f"selfcheck_aggregate must be 'mean' or 'max', got {self.selfcheck_aggregate!r}"
            )


@dataclass
class RoundTrace:
    """One voting round: all candidates with scores, the winner, and whether
    any sample signaled end-of-sequence.

    ``chosen`` is None iff every candidate was filtered or degenerate. For the
    overlap-scored methods the winner holds the maximal score among unfiltered
    candidates; selfcheck rounds store NLL values, where the winner is the
    minimum. independent rounds hold only the responses contributing at that
    sentence position, so their candidate count may be below n.
    """

    round_index: int
    candidates: list[ScoredSample]
    chosen: int | None
    any_ended: bool

    def to_dict(self) -> dict:
        return {
            "round_index": self.round_index,
            "candidates": [
                {
                    "text": s.candidate.text,
                    "tokens": list(s.candidate.tokens),
                    "ended": s.candidate.ended,
                    "token_logprobs": (
                        list(s.candidate.token_logprobs)
                        if s.candidate.token_logprobs is not None
                        else None
                    ),
                    "score": s.score,
                    "filtered": s.filtered,
                }
                for s in self.candidates
            ],
            "chosen": self.chosen,
            "any_ended": self.any_ended,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RoundTrace":
        candidates = [
            ScoredSample(
                candidate=SampleCandidate(
                    text=c["text"],
                    tokens=tuple(c["tokens"]),
                    ended=c["ended"],
                    token_logprobs=(
                        tuple(c["token_logprobs"]) if c.get("token_logprobs") is not None else None
                    ),
                ),
                score=c["score"],
                filtered=c["filtered"],
            )
            for c in data["candidates"]
        ]
        return cls(
            round_index=data["round_index"],
            candidates=candidates,
            chosen=data["chosen"],
            any_ended=data["any_ended"],
        )


@dataclass
class SummaryTrace:
    """The full record of one generated summary.

    ``sentences`` equals the chosen candidates' texts in round order for the
    iterative methods; rerankers record one selection round for the whole
    response and baselines record none. ``stop_reason`` is None only inside a
    partial trace attached to a RunError.
    """

    document_id: str
    sentences: list[str]
    rounds: list[RoundTrace]
    stop_reason: StopReason | None

    def summary(self, joiner: str = " ") -> str:
        return joiner.join(self.sentences)

    def to_dict(self) -> dict:
        return {
            "document_id": self.document_id,
            "sentences": list(self.sentences),
            "rounds": [r.to_dict() for r in self.rounds],
            "stop_reason": self.stop_reason.value if self.stop_reason else None,
        }


def _base_prompt(article: str, cfg: GenerationConfig) -> str:
    if not article.strip():
        raise ValueError("article must be non-empty")
    return cfg.prompt_template.replace("{article}", article)


def _prompt_with(base: str, sentences: Sequence[str], cfg: GenerationConfig) -> str:
    if not sentences:
        return base
    return cfg.sentence_joiner.join([base, *sentences])


def _candidate_filter(
    candidate: SampleCandidate, parse_provider: ParseProvider | None
) -> bool:
    """True when the candidate must not win selection: no tokens at all, or the
    grammar check (run on the raw sentence text) rejects it."""
    if not candidate.tokens:
        return True
    if parse_provider is None:
        return False
    return not is_grammatical(parse_provider.parse(candidate.text))


def _draw_sentence_candidates(
    backend: SamplingBackend,
    prompt: str,
    cfg: GenerationConfig,
    parse_provider: ParseProvider | None,
    document_id: str,
    round_index: int,
) -> tuple[list[SampleCandidate], list[bool]]:
    """Sample the n candidates of one round, truncated to their first sentence.

    A candidate counts as ended only when the backend signaled end-of-sequence
    AND nothing beyond the first sentence remained after truncation.
    """
    candidates: list[SampleCandidate] = []
    filtered: list[bool] = []
    for j in range(cfg.n):
        result = backend.complete(
            CompletionRequest(
                prompt=prompt,
                max_tokens=cfg.max_sentence_tokens,
                top_p=cfg.top_p,
                temperature=cfg.temperature,
                seed=derive_seed(cfg.seed, document_id, round_index, j),
            )
        )
        spans = split_sentences(result.text)
        text = spans[0].text if spans else ""
        ended = result.ended and len(spans) <= 1
        candidate = SampleCandidate(text=text, tokens=tuple(word_tokens(text)), ended=ended)
        candidates.append(candidate)
        filtered.append(_candidate_filter(candidate, parse_provider))
    return candidates, filtered


def _select_round(
    round_index: int,
    candidates: Sequence[SampleCandidate],
    filtered: Sequence[bool],
    raw_scores: Sequence[float | None],
    lower_is_better: bool,
) -> RoundTrace:
    """Build the round trace: filtered candidates score 0.0 and are excluded
    from selection; ties break toward the lowest index."""
    scored: list[ScoredSample] = []
    chosen: int | None = None
    best: float | None = None
    for i, candidate in enumerate(candidates):
        if filtered[i] or raw_scores[i] is None:
            scored.append(ScoredSample(candidate, 0.0, True))
            continue
        score = raw_scores[i]
        scored.append(ScoredSample(candidate, score, False))
        if best is None or (score < best if lower_is_better else score > best):
            best, chosen = score, i
    any_ended = any(c.ended for c in candidates)
    return RoundTrace(round_index, scored, chosen, any_ended)


def _require_method(cfg: GenerationConfig, *expected: Method) -> None:
    if cfg.method not in expected:
        names = " or ".join(m.value for m in expected)
        raise ConfigurationError(f"config method is {cfg.method.value!r}, expected {names}")


def _iterative_select(
    article: str,
    cfg: GenerationConfig,
    backend: SamplingBackend,
    parse_provider: ParseProvider | None,
    document_id: str,
    score_round: Callable[[Sequence[Sequence[str]]], Sequence[float | None]],
    lower_is_better: bool,
) -> SummaryTrace:
    base = _base_prompt(article, cfg)
    sentences: list[str] = []
    rounds: list[RoundTrace] = []
    try:
        for round_index in range(cfg.max_sentences):
            prompt = _prompt_with(base, sentences, cfg)
            candidates, filtered = _draw_sentence_candidates(
                backend, prompt, cfg, parse_provider, document_id, round_index
            )
            raw = score_round([c.tokens for c in candidates])
            trace = _select_round(round_index, candidates, filtered, raw, lower_is_better)
            rounds.append(trace)
            if trace.chosen is None:
                return SummaryTrace(document_id, sentences, rounds, StopReason.ABORTED_ALL_FILTERED)
            sentences.append(candidates[trace.chosen].text)
            if trace.any_ended:
                return SummaryTrace(document_id, sentences, rounds, StopReason.SAMPLE_ENDED)
        return SummaryTrace(document_id, sentences, rounds, StopReason.MAX_SENTENCES)
    except RunError as exc:
        exc.partial_trace = SummaryTrace(document_id, sentences, rounds, None)
        raise


def sample_and_select(
    article: str,
    cfg: GenerationConfig,
    backend: SamplingBackend,
    parse_provider: ParseProvider | None = None,
    *,
    document_id: str = "doc",
) -> SummaryTrace:
    """Iterative sentence-level voting by token overlap.

    Each round: draw n sentence continuations conditioned on the prompt plus
    all previously chosen sentences, zero out candidates failing the grammar
    filter, score the rest by token overlap over the whole round, and append
    the argmax. Generation stops after selection as soon as any of the round's
    samples ended, aborts (keeping the accumulated output) when every candidate
    was filtered, and otherwise runs to the sentence cap.
    """
    _require_method(cfg, Method.SAMPLE_SELECT)
    return _iterative_select(
        article, cfg, backend, parse_provider, document_id,
        score_round=round_overlap_scores,
        lower_is_better=False,
    )


def selfcheck_select(
    article: str,
    cfg: GenerationConfig,
    backend: SamplingBackend,
    parse_provider: ParseProvider | None = None,
    *,
    document_id: str = "doc",
) -> SummaryTrace:
    """Same loop as sample_and_select, selecting the candidate with the lowest
    unigram hallucination score instead. Filtered candidates are excluded from
    selection (a zeroed NLL would wrongly win, since lower is better)."""
    _require_method(cfg, Method.SELFCHECK_SELECT)
    if cfg.n < 2:
        raise ConfigurationError("selfcheck_select needs n >= 2")
    return _iterative_select(
        article, cfg, backend, parse_provider, document_id,
        score_round=lambda samples: round_unigram_nll_scores(
            samples, aggregate=cfg.selfcheck_aggregate
        ),
        lower_is_better=True,
    )


def _draw_responses(
    article: str,
    cfg: GenerationConfig,
    backend: SamplingBackend,
    document_id: str,
    want_logprobs: bool,
):
    base = _base_prompt(article, cfg)
    budget = cfg.max_sentences * cfg.max_sentence_tokens
    results = []
    for j in range(cfg.n):
        results.append(
            backend.complete(
                CompletionRequest(
                    prompt=base,
                    max_tokens=budget,
                    top_p=cfg.top_p,
                    temperature=cfg.temperature,
                    seed=derive_seed(cfg.seed, document_id, 0, j),
                    want_logprobs=want_logprobs,
                )
            )
        )
    return results


def independent_select(
    article: str,
    cfg: GenerationConfig,
    backend: SamplingBackend,
    parse_provider: ParseProvider | None = None,
    *,
    document_id: str = "doc",
) -> SummaryTrace:
    """Ablation of sample_and_select: draw n whole responses up front, then for
    each sentence position vote (token overlap, grammar-filtered) over the
    responses that still have a sentence there. Later sentences are NOT
    re-conditioned on the chosen ones.

    Voting stops at the first position with fewer than min(2, n) contributors
    (with n=1 the single response is simply passed through) or at the sentence
    cap.
    """
    _require_method(cfg, Method.INDEPENDENT)
    sentences: list[str] = []
    rounds: list[RoundTrace] = []
    try:
        results = _draw_responses(article, cfg, backend, document_id, want_logprobs=False)
    except RunError as exc:
        exc.partial_trace = SummaryTrace(document_id, sentences, rounds, None)
        raise
    responses = [[span.text for span in split_sentences(result.text)] for result in results]
    threshold = min(2, cfg.n)
    for position in range(cfg.max_sentences):
        column = [resp[position] for resp in responses if len(resp) > position]
        if len(column) < threshold:
            return SummaryTrace(document_id, sentences, rounds, StopReason.SAMPLE_ENDED)
        candidates = [
            SampleCandidate(text=text, tokens=tuple(word_tokens(text)), ended=False)
            for text in column
        ]
        filtered = [_candidate_filter(c, parse_provider) for c in candidates]
        raw = round_overlap_scores([c.tokens for c in candidates])
        trace = _select_round(position, candidates, filtered, raw, lower_is_better=False)
        rounds.append(trace)
        if trace.chosen is None:
            return SummaryTrace(document_id, sentences, rounds, StopReason.ABORTED_ALL_FILTERED)
        sentences.append(candidates[trace.chosen].text)
    return SummaryTrace(document_id, sentences, rounds, StopReason.MAX_SENTENCES)


def rerank_responses(
    article: str,
    cfg: GenerationConfig,
    backend: SamplingBackend,
    *,
    entailment: EntailmentPredicate | None = None,
    document_id: str = "doc",
) -> SummaryTrace:
    """Whole-response reranking: draw n complete responses and keep one.

    pcrr selects the argmax of the mean per-token log-probability (requires a
    backend reporting log-probabilities; checked before any sampling). scrr
    selects the argmax of the bidirectional entailment agreement count under
    the given predicate (exact string match by default). The chosen response,
    sentence-split, becomes the summary; a single selection round is recorded.
    """
    _require_method(cfg, Method.PCRR, Method.SCRR)
    if cfg.n < 2:
        raise ConfigurationError("reranking needs n >= 2")
    if cfg.method is Method.PCRR and not backend.supports_logprobs:
        raise ConfigurationError(
            "pcrr needs a backend reporting token log-probabilities"
        )
    try:
        results = _draw_responses(
            article, cfg, backend, document_id, want_logprobs=cfg.method is Method.PCRR
        )
    except RunError as exc:
        exc.partial_trace = SummaryTrace(document_id, [], [], None)
        raise
    candidates = [
        SampleCandidate(
            text=r.text,
            tokens=tuple(word_tokens(r.text)),
            ended=r.ended,
            token_logprobs=r.token_logprobs,
        )
        for r in results
    ]
    if cfg.method is Method.PCRR:
        filtered = [not c.token_logprobs for c in candidates]
        raw = [
            mean_logprob(c.token_logprobs) if c.token_logprobs else None
            for c in candidates
        ]
    else:
        predicate = entailment if entailment is not None else ExactMatchEntailment()
        texts = [c.text for c in candidates]
        filtered = [False] * len(candidates)
        raw = [float(agreement_score(i, texts, predicate)) for i in range(len(texts))]
    trace = _select_round(0, candidates, filtered, raw, lower_is_better=False)
    if trace.chosen is None:
        return SummaryTrace(document_id, [], [trace], StopReason.ABORTED_ALL_FILTERED)
    spans = split_sentences(results[trace.chosen].text)
    sentences = [span.text for span in spans][: cfg.max_sentences]
    stop = StopReason.SAMPLE_ENDED if results[trace.chosen].ended else StopReason.MAX_SENTENCES
    return SummaryTrace(document_id, sentences, [trace], stop)


def baseline_decode(
    article: str,
    cfg: GenerationConfig,
    backend: SamplingBackend,
    *,
    document_id: str = "doc",
) -> SummaryTrace:
    """Plain greedy / nucleus / beam summarization, no voting.

    Greedy and beam run exactly on distribution backends; on sampling-only
    backends greedy falls back to a temperature-0 request when the backend
    supports server-side argmax, and beam is a configuration error. The
    response's ended flag maps to stop_reason sample_ended, a token-cap stop
    to max_sentences; no selection rounds are recorded.
    """
    _require_method(cfg, Method.GREEDY, Method.NUCLEUS, Method.BEAM)
    base = _base_prompt(article, cfg)
    budget = cfg.max_sentences * cfg.max_sentence_tokens
    if cfg.method is Method.GREEDY:
        if isinstance(backend, DistributionBackend):
            result = greedy_decode(backend, base, budget)
        elif backend.supports_zero_temperature:
            result = backend.complete(
                CompletionRequest(
                    prompt=base, max_tokens=budget, top_p=1.0, temperature=0.0,
                    seed=derive_seed(cfg.seed, document_id, 0, 0),
                )
            )
        else:
            raise ConfigurationError(
                f"backend {backend.name!r} cannot decode greedily "
                "(no distribution access and no temperature-0 support)"
            )
    elif cfg.method is Method.BEAM:
        if not isinstance(backend, DistributionBackend):
            raise ConfigurationError("beam search needs a distribution backend")
        result = beam_search(backend, base, beams=cfg.beams, max_tokens=budget)
    else:
        result = backend.complete(
            CompletionRequest(
                prompt=base, max_tokens=budget, top_p=cfg.top_p,
                temperature=cfg.temperature,
                seed=derive_seed(cfg.seed, document_id, 0, 0),
            )
        )
    sentences = [span.text for span in split_sentences(result.text)][: cfg.max_sentences]
    stop = StopReason.SAMPLE_ENDED if result.ended else StopReason.MAX_SENTENCES
    return SummaryTrace(document_id, sentences, [], stop)


def generate(
    article: str,
    cfg: GenerationConfig,
    backend: SamplingBackend,
    *,
    parse_provider: ParseProvider | None = None,
    entailment: EntailmentPredicate | None = None,
    document_id: str = "doc",
) -> SummaryTrace:
    """Dispatch to the driver selected by cfg.method."""
    if cfg.method is Method.SAMPLE_SELECT:
        return sample_and_select(article, cfg, backend, parse_provider, document_id=document_id)
    if cfg.method is Method.INDEPENDENT:
        return independent_select(article, cfg, backend, parse_provider, document_id=document_id)
    if cfg.method is Method.SELFCHECK_SELECT:
        return selfcheck_select(article, cfg, backend, parse_provider, document_id=document_id)
    if cfg.method in (Method.PCRR, Method.SCRR):
        return rerank_responses(article, cfg, backend, entailment=entailment, document_id=document_id)
    return baseline_decode(article, cfg, backend, document_id=document_id)
