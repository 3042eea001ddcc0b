"""Grammaticality filter: a sentence passes when both a subject and a finite
verb signal are found among its (pos, dep) tags.

The filter itself is provider-agnostic: any source of per-word Penn Treebank
POS tags and dependency labels can drive it. Three providers ship here: an
offline heuristic, a client for the HTTP parse service, and a scripted
provider for tests. Services using other tag schemes must map their labels
before responding.
"""

from __future__ import annotations

import abc
import logging
import os
import threading
from dataclasses import dataclass
from typing import Mapping, Sequence

import requests

from sampleselect.errors import ProtocolError, RetryableError

logger = logging.getLogger(__name__)

__all__ = [
    "AUX_DEPS",
    "FINITE_VERB_POS",
    "SUBJECT_DEPS",
    "FallbackParseProvider",
    "HeuristicParseProvider",
    "ParseProvider",
    "ParseToken",
    "RemoteParseProvider",
    "ScriptedParseProvider",
    "heuristic_parse",
    "is_grammatical",
]

#: Dependency labels that count as a subject.
SUBJECT_DEPS = frozenset({"nsubj", "nsubjpass", "expl"})
#: POS tags that count as a finite verb.
FINITE_VERB_POS = frozenset({"VBZ", "VBD", "VBP"})
#: Dependency labels that count as a verb signal even without a finite POS tag.
AUX_DEPS = frozenset({"aux", "auxpass"})


@dataclass(frozen=True)
class ParseToken:
    """One word with its part-of-speech tag and dependency relation label."""

    surface: str
    pos: str
    dep: str


def is_grammatical(parse: Sequence[ParseToken]) -> bool:
    """True iff the parse contains a subject and a finite-verb signal.

    Subject: any token whose dep is nsubj, nsubjpass or expl. Verb: any token
    whose pos is VBZ, VBD or VBP, or whose dep is aux or auxpass. Depends only
    on the multiset of (pos, dep) pairs; surfaces and order are irrelevant.
    An empty parse is ungrammatical.
    """
    has_subject = any(tok.dep in SUBJECT_DEPS for tok in parse)
    has_verb = any(tok.pos in FINITE_VERB_POS or tok.dep in AUX_DEPS for tok in parse)
    return has_subject and has_verb


class ParseProvider(abc.ABC):
    """Source of per-word (pos, dep) tags for a sentence."""

    name: str = "provider"
    remote: bool = False

    @abc.abstractmethod
    def parse(self, sentence: str) -> list[ParseToken]:
        """One ParseToken per word of the sentence, in order."""


_SUBJECT_PRONOUNS = frozenset({"i", "you", "he", "she", "it", "we", "they", "who"})
_FINITE_AUXILIARIES = {
    "is": "VBZ", "has": "VBZ", "does": "VBZ",
    "are": "VBP", "have": "VBP", "do": "VBP",
    "was": "VBD", "were": "VBD", "had": "VBD", "did": "VBD",
}


def _strip_edges(piece: str) -> str:
    start = 0
    end = len(piece)
    while start < end and not piece[start].isalnum():
        start += 1
    while end > start and not piece[end - 1].isalnum():
        end -= 1
    return piece[start:end]


def heuristic_parse(sentence: str) -> list[ParseToken]:
    """Shallow offline tagging from closed word lists and suffix rules.

    Personal pronouns and "there" become subjects; a closed list of finite
    auxiliaries gets its finite POS tag; words ending in -ed, or in -s after a
    subject has appeared, are treated as finite verbs; everything else is
    tagged X/dep. Recall beats precision here: the output exists to feed
    is_grammatical, not downstream syntax.
    """
    tokens: list[ParseToken] = []
    seen_subject = False
    for piece in sentence.split():
        word = _strip_edges(piece)  # keep original casing for the surface
        if not word:
            continue
        lowered = word.lower()
        if lowered in _SUBJECT_PRONOUNS:
            tokens.append(ParseToken(word, "PRP", "nsubj"))
            seen_subject = True
        elif lowered == "there":
            tokens.append(ParseToken(word, "EX", "expl"))
            seen_subject = True
        elif lowered in _FINITE_AUXILIARIES:
            tokens.append(ParseToken(word, _FINITE_AUXILIARIES[lowered], "aux"))
        elif lowered.endswith("ed") and len(lowered) > 3:
            tokens.append(ParseToken(word, "VBD", "dep"))
        elif (
            seen_subject
            and len(lowered) > 2
            and lowered.endswith("s")
            and not lowered.endswith(("ss", "'s"))
        ):
            tokens.append(ParseToken(word, "VBZ", "dep"))
        else:
            tokens.append(ParseToken(word, "X", "dep"))
    return tokens


class HeuristicParseProvider(ParseProvider):
    """Offline fallback provider wrapping :func:`heuristic_parse`."""

    name = "heuristic"
    remote = False

    def parse(self, sentence: str) -> list[ParseToken]:
        return heuristic_parse(sentence)


class RemoteParseProvider(ParseProvider):
    """Client for the /parse wire protocol.

    POST {endpoint}/parse with {"sentence": ...}; expects 200 with
    {"tokens": [{"text", "pos", "dep"}, ...]}. Any non-200 status or transport
    failure raises RetryableError; a malformed payload (missing fields, or an
    empty token array for a non-empty sentence) raises ProtocolError. Safe for
    concurrent use: sessions are per-thread.
    """

    remote = True

    def __init__(self, endpoint: str, *, timeout: float = 10.0):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.name = f"remote({self.endpoint})"
        self._local = threading.local()

    def _session(self) -> requests.Session:
        session = getattr(self._local, "session", None)
        if session is None:
            session = requests.Session()
            token = os.environ.get("SAMPLESELECT_PARSE_TOKEN")
            if token:
                session.headers["Authorization"] = f"Bearer {token}"
            self._local.session = session
        return session

    def parse(self, sentence: str) -> list[ParseToken]:
        try:
            response = self._session().post(
                f"{self.endpoint}/parse",
                json={"sentence": sentence},
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise RetryableError(f"parse service unreachable: {exc}") from exc
        if response.status_code != 200:
            raise RetryableError(f"parse service returned HTTP {response.status_code}")
        try:
            raw_tokens = response.json()["tokens"]
        except (ValueError, KeyError, TypeError) as exc:
            raise ProtocolError(f"malformed parse response: {exc}") from exc
        if not isinstance(raw_tokens, list):
            raise ProtocolError("parse response field 'tokens' is not a list")
        if not raw_tokens and sentence.strip():
            raise ProtocolError("parse service returned no tokens for a non-empty sentence")
        tokens: list[ParseToken] = []
        for item in raw_tokens:
            if not isinstance(item, dict) or not {"text", "pos", "dep"} <= item.keys():
                raise ProtocolError(f"parse token missing fields: {item!r}")
            tokens.append(ParseToken(surface=item["text"], pos=item["pos"], dep=item["dep"]))
        return tokens


class FallbackParseProvider(ParseProvider):
    """Delegates to a primary provider, falling back on transport/protocol errors.

    Decoding must never block on the parse service: a failed remote parse is
    logged and replaced by the fallback's answer.
    """

    def __init__(self, primary: ParseProvider, fallback: ParseProvider | None = None):
        self.primary = primary
        self.fallback = fallback if fallback is not None else HeuristicParseProvider()
        self.remote = primary.remote
        self.name = f"{primary.name}+{self.fallback.name}"

    def parse(self, sentence: str) -> list[ParseToken]:
        try:
            return self.primary.parse(sentence)
        except (RetryableError, ProtocolError) as exc:
            logger.warning(
                "parse provider %s failed (%s); falling back to %s",
                self.primary.name, exc, self.fallback.name,
            )
            return self.fallback.parse(sentence)


class ScriptedParseProvider(ParseProvider):
    """Test provider returning pre-scripted parses.

    Sentences absent from the mapping get ``default`` (an empty default makes
    every unknown sentence ungrammatical).
    """

    name = "scripted"
    remote = False

    def __init__(
        self,
        parses: Mapping[str, Sequence[ParseToken]] | None = None,
        default: Sequence[ParseToken] | None = None,
    ):
        self._parses = dict(parses or {})
        self._default = list(default) if default is not None else []

    def parse(self, sentence: str) -> list[ParseToken]:
        return list(self._parses.get(sentence, self._default))
