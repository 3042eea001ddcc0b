"""Sentence-level self-consistency decoding.

Sample several continuations per sentence, keep the one whose tokens the other
samples agree on most, re-condition, repeat. Ships with baseline decoders
(greedy, nucleus, beam, whole-response reranking, lowest-NLL selection), a
grammaticality filter over pluggable parse providers, deterministic local
backends for offline experiments, unigram-F1 evaluation, and a batch CLI.
"""

from sampleselect.backends import (
    CompletionRequest,
    CompletionResult,
    DistributionBackend,
    RandomDistributionBackend,
    RemoteCompletionBackend,
    SamplingBackend,
    ScriptedBackend,
    SyntheticHallucinationBackend,
    TableDistributionBackend,
    beam_search,
    derive_seed,
    greedy_decode,
    nucleus_sample,
)
from sampleselect.decoder import (
    DEFAULT_PROMPT_TEMPLATE,
    GenerationConfig,
    Method,
    RoundTrace,
    StopReason,
    SummaryTrace,
    baseline_decode,
    generate,
    independent_select,
    rerank_responses,
    sample_and_select,
    selfcheck_select,
)
from sampleselect.evaluation import EvalRecord, aggregate_report, rouge1_f1, summary_length_tokens
from sampleselect.grammar import (
    FallbackParseProvider,
    HeuristicParseProvider,
    ParseProvider,
    ParseToken,
    RemoteParseProvider,
    ScriptedParseProvider,
    heuristic_parse,
    is_grammatical,
)
from sampleselect.scoring import (
    KERNEL_BACKEND,
    EntailmentPredicate,
    ExactMatchEntailment,
    RemoteEntailment,
    SampleCandidate,
    ScoredSample,
    agreement_score,
    mean_logprob,
    overlap_score,
    round_overlap_scores,
    round_unigram_nll_scores,
    unigram_nll_score,
)
from sampleselect.textproc import SentenceSpan, clean_article, split_sentences, word_tokens

__version__ = "0.1.0"
