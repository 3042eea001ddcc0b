"""Backend interfaces and the completion request/result types.

Two capability levels exist. SamplingBackend can produce text continuations
(remote servers, scripted mocks). DistributionBackend additionally exposes the
full next-token distribution over a finite vocabulary, which makes greedy and
beam decoding exact and nucleus sampling reproducible. Decoders are written
against these interfaces only, so local and remote backends are interchangeable.
"""

from __future__ import annotations

import abc
import hashlib
from dataclasses import dataclass
from typing import Sequence

from sampleselect.errors import ConfigurationError

__all__ = [
    "CompletionRequest",
    "CompletionResult",
    "DistributionBackend",
    "SamplingBackend",
    "derive_seed",
]


def derive_seed(*parts: object) -> int:
    """Stable 63-bit seed from arbitrary parts (run seed, document id, round,
    sample index). Platform- and process-independent."""
    digest = hashlib.blake2b(repr(parts).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


@dataclass(frozen=True)
class CompletionRequest:
    """One completion call. ``seed`` makes deterministic backends reproducible;
    ``want_logprobs`` obliges the backend to report one log-probability per
    generated token."""

    prompt: str
    max_tokens: int
    top_p: float = 1.0
    temperature: float = 1.0
    seed: int | None = None
    want_logprobs: bool = False

    def __post_init__(self):
        if self.max_tokens < 1:
            raise ConfigurationError("max_tokens must be >= 1")
        if not 0.0 < self.top_p <= 1.0:
            raise ConfigurationError(f"top_p must be in (0, 1], got {self.top_p}")
        if self.temperature < 0.0:
            raise ConfigurationError(f"temperature must be >= 0, got {self.temperature}")


@dataclass(frozen=True)
class CompletionResult:
    """A sampled continuation. ``ended`` is True iff the model emitted
    end-of-sequence within this completion."""

    text: str
    ended: bool
    token_logprobs: tuple[float, ...] | None = None


class SamplingBackend(abc.ABC):
    """Anything that can produce a text continuation for a prompt.

    Implementations must be safe for concurrent complete() calls; decoders may
    issue the n samples of a round in parallel.
    """

    name: str = "backend"
    supports_logprobs: bool = False
    #: Whether temperature=0 requests perform server-side argmax decoding.
    supports_zero_temperature: bool = True

    @abc.abstractmethod
    def complete(self, request: CompletionRequest) -> CompletionResult:
        ...


class DistributionBackend(SamplingBackend):
    """Backend exposing full next-token distributions over a finite vocabulary.

    ``vocabulary`` is a tuple of token strings that includes END_TOKEN;
    next_token_dist returns one probability per vocabulary entry, summing to 1
    within 1e-9. complete() runs seeded nucleus sampling over the distribution
    (argmax decoding when temperature is 0) and always reports per-token
    log-probabilities under the untempered distribution.
    """

    END_TOKEN = "</s>"
    supports_logprobs = True

    vocabulary: tuple[str, ...] = ()

    @abc.abstractmethod
    def next_token_dist(self, prompt: str, prefix: Sequence[str]) -> Sequence[float]:
        """Distribution over the vocabulary after ``prefix`` tokens have been
        generated for ``prompt``."""

    def complete(self, request: CompletionRequest) -> CompletionResult:
        from sampleselect.backends.decode import greedy_decode, nucleus_sample

        if request.temperature == 0.0:
            return greedy_decode(self, request.prompt, request.max_tokens)
        return nucleus_sample(
            self,
            request.prompt,
            p=request.top_p,
            rng_seed=request.seed if request.seed is not None else 0,
            max_tokens=request.max_tokens,
            temperature=request.temperature,
        )
