"""Local deterministic backends for testing and offline experiments."""

from __future__ import annotations

import math
import random
import threading
from typing import Mapping, Sequence

from sampleselect.backends.base import (
    CompletionRequest,
    CompletionResult,
    DistributionBackend,
    SamplingBackend,
    derive_seed,
)
from sampleselect.errors import RunError

__all__ = [
    "RandomDistributionBackend",
    "ScriptedBackend",
    "TableDistributionBackend",
]


class ScriptedBackend(SamplingBackend):
    """Replays a fixed sequence of completions, ignoring the request.

    Script items may be CompletionResult objects, plain strings (wrapped with
    ended=False), or dicts with "text" / "ended" / "token_logprobs" keys.
    Raises RunError when the script runs out unless ``loop`` is set. Thread-safe.
    """

    name = "scripted"

    def __init__(self, script: Sequence[object], *, loop: bool = False):
        self._script = [self._coerce(item) for item in script]
        self._loop = loop
        self._position = 0
        self._lock = threading.Lock()
        self.supports_logprobs = bool(self._script) and all(
            result.token_logprobs is not None for result in self._script
        )

    @staticmethod
    def _coerce(item: object) -> CompletionResult:
        if isinstance(item, CompletionResult):
            return item
        if isinstance(item, str):
            return CompletionResult(item, False)
        if isinstance(item, dict):
            logprobs = item.get("token_logprobs")
            return CompletionResult(
                text=item["text"],
                ended=bool(item.get("ended", False)),
                token_logprobs=tuple(logprobs) if logprobs is not None else None,
            )
        raise TypeError(f"cannot script a completion from {type(item).__name__}")

    def complete(self, request: CompletionRequest) -> CompletionResult:
        with self._lock:
            if self._position >= len(self._script):
                if not self._loop:
                    raise RunError(
                        f"scripted backend exhausted after {len(self._script)} completions"
                    )
                self._position = 0
            result = self._script[self._position]
            self._position += 1
        return result


class RandomDistributionBackend(DistributionBackend):
    """Deterministic pseudo-random language model for fuzzing.

    The next-token distribution is a pure function of (seed, prompt, prefix):
    identical construction arguments always produce identical behavior, across
    processes and platforms. ``end_weight`` scales how much mass the END token
    tends to receive, i.e. how quickly sequences terminate.
    """

    def __init__(
        self,
        seed: int = 0,
        vocab_size: int = 8,
        end_weight: float = 0.5,
        name: str = "random-dist",
    ):
        if vocab_size < 1:
            raise ValueError("vocab_size must be >= 1")
        self.seed = seed
        self.end_weight = end_weight
        self.name = name
        self.vocabulary = tuple(f"w{i}" for i in range(vocab_size)) + (self.END_TOKEN,)

    def next_token_dist(self, prompt: str, prefix: Sequence[str]) -> list[float]:
        rng = random.Random(derive_seed("rdb", self.seed, prompt, tuple(prefix)))
        weights = [rng.random() ** 2 for _ in range(len(self.vocabulary) - 1)]
        weights.append(self.end_weight * rng.random())
        total = math.fsum(weights)
        return [w / total for w in weights]


class TableDistributionBackend(DistributionBackend):
    """Distribution backend scripted by an explicit prefix -> distribution table.

    ``table`` maps a tuple of generated tokens to {token: probability};
    prefixes absent from the table emit END with probability 1. The prompt is
    ignored. Handy for hand-built decoding trees with known optimal paths.
    """

    name = "table-dist"

    def __init__(self, table: Mapping[tuple[str, ...], Mapping[str, float]]):
        self._table = {tuple(k): dict(v) for k, v in table.items()}
        seen: list[str] = []
        for dist in self._table.values():
            for token in dist:
                if token not in seen:
                    seen.append(token)
        if self.END_TOKEN in seen:
            seen.remove(self.END_TOKEN)
        self.vocabulary = tuple(seen) + (self.END_TOKEN,)

    def next_token_dist(self, prompt: str, prefix: Sequence[str]) -> list[float]:
        row = self._table.get(tuple(prefix))
        if row is None:
            row = {self.END_TOKEN: 1.0}
        return [row.get(token, 0.0) for token in self.vocabulary]
