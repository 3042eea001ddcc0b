"""Synthetic fact-slot backend: a controllable hallucination test rig.

The model of interest: repeated samples tend to disagree on hallucinated
details but agree on true ones. This backend makes that measurable. It emits
one templated sentence per configured fact, "It is <slot> .", where the slot
produces the true token with probability ``fidelity`` and otherwise one of
``decoys`` decoy tokens uniformly. After the last fact it emits END.
"""

from __future__ import annotations

from typing import Sequence

from sampleselect.backends.base import DistributionBackend
from sampleselect.errors import ConfigurationError

__all__ = ["SyntheticHallucinationBackend"]

_TEMPLATE = ("It", "is")  # slot follows, then the terminator
_TERMINATOR = "."


class SyntheticHallucinationBackend(DistributionBackend):
    """Distribution backend over templated fact sentences.

    ``truth`` lists the true slot token of each sentence, in order; sentence t
    has the decoy tokens "<truth[t]>d0" .. "<truth[t]>d<decoys-1>". The backend
    locates its position in the document by counting '.' terminators across the
    prompt and the generated prefix, so prompts fed to it must not contain '.'
    themselves. Distributions are exact; all randomness comes from the seeded
    sampler driving complete().
    """

    name = "synthetic"

    def __init__(
        self,
        truth: Sequence[str],
        fidelity: float = 0.6,
        decoys: int = 9,
        seed: int = 0,
    ):
        if not truth:
            raise ConfigurationError("need at least one fact")
        if not 0.0 < fidelity <= 1.0:
            raise ConfigurationError(f"fidelity must be in (0, 1], got {fidelity}")
        if decoys < 1:
            raise ConfigurationError(f"decoys must be >= 1, got {decoys}")
        self.truth = tuple(truth)
        self.fidelity = float(fidelity)
        self.decoys = int(decoys)
        self.seed = seed  # kept for interface symmetry; distributions are exact
        self.decoy_tokens = tuple(
            tuple(f"{token}d{d}" for d in range(decoys)) for token in self.truth
        )
        vocab = list(_TEMPLATE) + [_TERMINATOR]
        for t, token in enumerate(self.truth):
            vocab.append(token)
            vocab.extend(self.decoy_tokens[t])
        self.vocabulary = tuple(vocab) + (self.END_TOKEN,)
        self._index = {token: i for i, token in enumerate(self.vocabulary)}

    def slot_token(self, sentence_tokens: Sequence[str]) -> str | None:
        """The slot value of one emitted sentence ("it is X" -> "X"), or None."""
        return sentence_tokens[2] if len(sentence_tokens) >= 3 else None

    def next_token_dist(self, prompt: str, prefix: Sequence[str]) -> list[float]:
        sentence = prompt.count(_TERMINATOR) + sum(
            1 for token in prefix if token == _TERMINATOR
        )
        dist = [0.0] * len(self.vocabulary)
        if sentence >= len(self.truth):
            dist[self._index[self.END_TOKEN]] = 1.0
            return dist
        position = 0
        for token in reversed(prefix):
            if token == _TERMINATOR:
                break
            position += 1
        if position < len(_TEMPLATE):
            dist[self._index[_TEMPLATE[position]]] = 1.0
        elif position == len(_TEMPLATE):
            dist[self._index[self.truth[sentence]]] = self.fidelity
            share = (1.0 - self.fidelity) / self.decoys
            for decoy in self.decoy_tokens[sentence]:
                dist[self._index[decoy]] = share
        else:
            dist[self._index[_TERMINATOR]] = 1.0
        return dist
