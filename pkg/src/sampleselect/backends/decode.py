"""Exact decoding algorithms over distribution backends: greedy, nucleus, beam.

All three are deterministic given their arguments (nucleus via the explicit
seed) and break probability ties toward the lowest vocabulary index. Reported
token log-probabilities are taken from the untempered base distribution.
"""

from __future__ import annotations

import math
import random

from sampleselect.backends.base import CompletionResult, DistributionBackend

__all__ = ["beam_search", "greedy_decode", "nucleus_sample"]

# Slack when comparing cumulative nucleus mass against p; absorbs the 1e-9
# normalization tolerance backends are allowed.
_CUM_EPS = 1e-12


def _distribution(backend: DistributionBackend, prompt: str, prefix: list[str]) -> list[float]:
    dist = list(backend.next_token_dist(prompt, prefix))
    if len(dist) != len(backend.vocabulary):
        raise ValueError(
            f"backend {backend.name!r} returned {len(dist)} probabilities "
            f"for a vocabulary of {len(backend.vocabulary)}"
        )
    total = math.fsum(dist)
    if abs(total - 1.0) > 1e-6 or any(q < 0.0 for q in dist):
        raise ValueError(f"backend {backend.name!r} returned an invalid distribution (sum={total})")
    return dist


def greedy_decode(
    backend: DistributionBackend, prompt: str, max_tokens: int
) -> CompletionResult:
    """Pick the argmax token at each step until END or the token cap."""
    tokens: list[str] = []
    logprobs: list[float] = []
    ended = False
    for _ in range(max_tokens):
        dist = _distribution(backend, prompt, tokens)
        best = 0
        best_p = dist[0]
        for t in range(1, len(dist)):
            if dist[t] > best_p:
                best, best_p = t, dist[t]
        token = backend.vocabulary[best]
        if token == backend.END_TOKEN:
            ended = True
            break
        tokens.append(token)
        logprobs.append(math.log(best_p))
    return CompletionResult(" ".join(tokens), ended, tuple(logprobs))


def nucleus_sample(
    backend: DistributionBackend,
    prompt: str,
    p: float,
    rng_seed: int,
    max_tokens: int,
    temperature: float = 1.0,
) -> CompletionResult:
    """Seeded top-p sampling.

    At each step the tokens are sorted by descending probability (ties by
    vocabulary order), the smallest prefix whose cumulative mass reaches p is
    kept, renormalized, and sampled by inverse CDF from the seeded generator.
    Temperature t != 1 reshapes the distribution as prob**(1/t), renormalized,
    before truncation; temperature 0 degenerates to greedy decoding.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p must be in (0, 1], got {p}")
    if temperature == 0.0:
        return greedy_decode(backend, prompt, max_tokens)
    rng = random.Random(rng_seed)
    tokens: list[str] = []
    logprobs: list[float] = []
    ended = False
    for _ in range(max_tokens):
        base = _distribution(backend, prompt, tokens)
        if temperature != 1.0:
            shaped = [q ** (1.0 / temperature) for q in base]
            total = math.fsum(shaped)
            work = [w / total for w in shaped]
        else:
            work = base
        order = sorted(range(len(work)), key=lambda t: (-work[t], t))
        nucleus: list[int] = []
        cumulative = 0.0
        for t in order:
            nucleus.append(t)
            cumulative += work[t]
            if cumulative >= p - _CUM_EPS:
                break
        draw = rng.random() * cumulative  # renormalization folded into the draw
        acc = 0.0
        choice = nucleus[-1]
        for t in nucleus:
            acc += work[t]
            if draw < acc:
                choice = t
                break
        token = backend.vocabulary[choice]
        if token == backend.END_TOKEN:
            ended = True
            break
        tokens.append(token)
        logprobs.append(math.log(base[choice]))
    return CompletionResult(" ".join(tokens), ended, tuple(logprobs))


def beam_search(
    backend: DistributionBackend,
    prompt: str,
    beams: int = 5,
    max_tokens: int = 128,
) -> CompletionResult:
    """Length-unnormalized log-probability beam search.

    Each step expands every active hypothesis over the whole vocabulary and
    keeps the ``beams`` best expansions; a hypothesis that emits END is frozen
    and competes at the end. Returns the finished hypothesis with the highest
    total log-probability, or the best unfinished one at the token cap. With
    beams=1 this reproduces greedy decoding token for token.
    """
    if beams < 1:
        raise ValueError(f"beams must be >= 1, got {beams}")
    # hypotheses: (tokens, total logprob incl. END when finished, per-token logprobs)
    active: list[tuple[list[str], float, list[float]]] = [([], 0.0, [])]
    finished: list[tuple[list[str], float, list[float]]] = []
    end = backend.END_TOKEN
    for _ in range(max_tokens):
        if not active:
            break
        expansions: list[tuple[float, list[str], list[float], int, float]] = []
        for tokens, total, lps in active:
            dist = _distribution(backend, prompt, tokens)
            for t, q in enumerate(dist):
                if q <= 0.0:
                    continue
                lp = math.log(q)
                expansions.append((total + lp, tokens, lps, t, lp))
        if not expansions:
            break
        # Stable sort: ties keep (beam order, vocabulary order) enumeration.
        expansions.sort(key=lambda item: -item[0])
        active = []
        for new_total, tokens, lps, t, lp in expansions[:beams]:
            token = backend.vocabulary[t]
            if token == end:
                finished.append((tokens, new_total, lps))
            else:
                active.append((tokens + [token], new_total, lps + [lp]))
        if finished and active:
            best_finished = max(total for _, total, _ in finished)
            best_active = max(total for _, total, _ in active)
            if best_finished >= best_active:  # extensions only lower the total
                break
    pool = finished if finished else active
    if not pool:
        return CompletionResult("", False, ())
    best_tokens, _, best_lps = max(enumerate(pool), key=lambda item: (item[1][1], -item[0]))[1]
    return CompletionResult(" ".join(best_tokens), bool(finished), tuple(best_lps))
