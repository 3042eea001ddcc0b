"""Deterministic text utilities: article cleanup, sentence segmentation, token normalization.

Everything here is a pure function on immutable inputs and safe to call from
any number of threads. The segmenter is intentionally rule-based (no model
dependencies) and English-oriented; callers that need a different segmentation
policy can swap it behind the same span contract.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

__all__ = [
    "ABBREVIATIONS",
    "SentenceSpan",
    "WordToken",
    "clean_article",
    "split_sentences",
    "word_tokens",
]

#: A normalized word token: case-folded, stripped of edge punctuation,
#: guaranteed to contain at least one letter or digit.
WordToken = str

_PERIOD_BEFORE_LETTER = re.compile(r"\.([a-zA-Z])")
_RUN_TOGETHER = re.compile(r"([a-z])([A-Z])")
_SHARE_BOILERPLATE = (
    "Share this with Email Facebook Messenger Messenger Twitter Pinterest "
    "Whats App Linked In Copy this link"
)

#: Closed list of abbreviations whose trailing period never ends a sentence.
ABBREVIATIONS = (
    "Mr.", "Mrs.", "Ms.", "Dr.", "Prof.", "St.", "Jr.", "Sr.",
    "U.S.", "U.K.", "No.", "vs.", "etc.", "e.g.", "i.e.",
)

_TERMINATORS = frozenset(".!?")


@dataclass(frozen=True)
class SentenceSpan:
    """One sentence: trimmed text plus [start, end) character offsets into the source."""

    text: str
    start: int
    end: int


def clean_article(text: str) -> str:
    """Normalize a scraped news article before it is used in a prompt.

    Applies exactly three substitutions, in order:

    1. a period directly followed by a letter gains a space after the period;
    2. a lowercase letter run straight into an uppercase one gains a space;
    3. the social-media share boilerplate is deleted wherever it occurs.

    Single pass only; the result is not guaranteed to be a fixed point. Never
    apply this to text that feeds metric computation.
    """
    text = _PERIOD_BEFORE_LETTER.sub(r". \1", text)
    text = _RUN_TOGETHER.sub(r"\1 \2", text)
    return text.replace(_SHARE_BOILERPLATE, "")


def _ends_with_abbreviation(text: str, dot_index: int) -> bool:
    # dot_index points at a '.'; the abbreviation must be a whole word.
    head = text[: dot_index + 1]
    for abbr in ABBREVIATIONS:
        if head.endswith(abbr):
            before = dot_index - len(abbr)
            if before < 0 or not text[before].isalnum():
                return True
    return False


def split_sentences(text: str) -> list[SentenceSpan]:
    """Split text into sentence spans.

    A '.', '!' or '?' ends a sentence when it is followed by whitespace and
    then an uppercase letter, or by nothing but whitespace up to end-of-text,
    unless the period terminates a known abbreviation. Trailing text without a
    terminator forms a final span. Every non-whitespace character of the input
    lands in exactly one span.
    """
    spans: list[SentenceSpan] = []
    n = len(text)
    cursor = 0  # start of the not-yet-emitted region

    def emit(upto: int) -> None:
        nonlocal cursor
        start = cursor
        while start < upto and text[start].isspace():
            start += 1
        end = upto
        while end > start and text[end - 1].isspace():
            end -= 1
        if end > start:
            spans.append(SentenceSpan(text=text[start:end], start=start, end=end))
        cursor = upto

    i = 0
    while i < n:
        ch = text[i]
        if ch in _TERMINATORS and (ch != "." or not _ends_with_abbreviation(text, i)):
            j = i + 1
            while j < n and text[j].isspace():
                j += 1
            if j == n or (j > i + 1 and text[j].isupper()):
                emit(i + 1)
                i = j
                continue
        i += 1
    emit(n)
    return spans


def word_tokens(sentence: str) -> list[WordToken]:
    """Normalize a sentence into word tokens.

    Splits on whitespace, strips leading/trailing non-alphanumeric characters
    from each piece, case-folds, and drops pieces left empty. Interior
    punctuation ("co-op", "u.s.-based") is preserved, as are order and
    duplicates.
    """
    tokens: list[WordToken] = []
    for piece in sentence.split():
        start = 0
        end = len(piece)
        while start < end and not piece[start].isalnum():
            start += 1
        while end > start and not piece[end - 1].isalnum():
            end -= 1
        if end > start:
            tokens.append(piece[start:end].casefold())
    return tokens
