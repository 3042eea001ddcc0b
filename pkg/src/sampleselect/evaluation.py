"""Reference-based and descriptive evaluation: unigram F1 and length statistics.

Both metrics run on the same word-token normalization as the scorers. No
stemming, single reference. Pure functions, thread-safe.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping

from sampleselect.errors import UsageError
from sampleselect.textproc import word_tokens

__all__ = ["EvalRecord", "aggregate_report", "rouge1_f1", "summary_length_tokens"]


@dataclass(frozen=True)
class EvalRecord:
    """Per-document evaluation: F1 is None when no reference exists."""

    document_id: str
    rouge1_f1: float | None
    length_tokens: int


def rouge1_f1(candidate: str, reference: str) -> float:
    """Clipped-unigram F1 between candidate and reference.

    match = sum over words of min(candidate count, reference count);
    F1 = 2*match / (|candidate| + |reference|), which equals the harmonic mean
    of precision match/|candidate| and recall match/|reference|. Returns 0 when
    either side is empty or nothing matches.
    """
    cand = word_tokens(candidate)
    ref = word_tokens(reference)
    if not cand or not ref:
        return 0.0
    match = sum((Counter(cand) & Counter(ref)).values())
    if match == 0:
        return 0.0
    return 2 * match / (len(cand) + len(ref))


def summary_length_tokens(text: str) -> int:
    """Length in normalized word tokens (not model subword tokens)."""
    return len(word_tokens(text))


def aggregate_report(
    records: Iterable[EvalRecord],
    *,
    method: str,
    stop_reasons: Mapping[str, int] | None = None,
) -> dict:
    """Per-method means with counts, as the report JSON object.

    The F1 mean covers only records that have a reference; rouge1_f1_count
    says how many that was. Raises UsageError on an empty record list.
    """
    records = list(records)
    if not records:
        raise UsageError("cannot aggregate an empty record list")
    f1_values = [r.rouge1_f1 for r in records if r.rouge1_f1 is not None]
    return {
        "method": method,
        "n_docs": len(records),
        "rouge1_f1_mean": math.fsum(f1_values) / len(f1_values) if f1_values else None,
        "rouge1_f1_count": len(f1_values),
        "length_mean": math.fsum(r.length_tokens for r in records) / len(records),
        "stop_reasons": dict(stop_reasons or {}),
    }
