"""Pure-Python scoring kernels.

The compiled module (_kernels.pyx) mirrors these functions exactly; either one
may be selected at import time by sampleselect.scoring. Inputs are a round of
samples encoded as dense integer token ids:

- ``ids``: flattened token ids of all samples, sample by sample;
- ``offsets``: n+1 boundaries, sample i occupying ids[offsets[i]:offsets[i+1]];
- ``vocab_size``: number of distinct ids (ids are dense in [0, vocab_size)).

Overlap numerators are integers, so both kernels agree bit-for-bit after the
final division; the NLL sums use the same operation order so they agree to
the last ulp on one platform.
"""

from __future__ import annotations

import math
from typing import Sequence

BACKEND = "python"


def overlap_numerators(ids: Sequence[int], offsets: Sequence[int], vocab_size: int) -> list[int]:
    """For each sample, the sum over its tokens of how many samples' token sets
    contain that token (the sample itself included)."""
    ids = list(ids)
    offsets = list(offsets)
    n = len(offsets) - 1
    containing = [0] * vocab_size  # bitmask of samples whose set holds each id
    for k in range(n):
        mask = 1 << k
        for j in range(offsets[k], offsets[k + 1]):
            containing[ids[j]] |= mask
    counts = [mask.bit_count() for mask in containing]
    return [
        sum(counts[ids[j]] for j in range(offsets[i], offsets[i + 1]))
        for i in range(n)
    ]


def unigram_nll_stats(
    ids: Sequence[int], offsets: Sequence[int], vocab_size: int
) -> tuple[list[float], list[float]]:
    """Per sample: (sum, max) over its tokens of -ln p(token), where p is an
    add-one smoothed unigram model of the other samples' token multiset.

    p(w) = (count_other(w) + 1) / (T_other + vocab_size). Empty samples yield
    (0.0, 0.0); callers must treat those as degenerate.
    """
    ids = list(ids)
    offsets = list(offsets)
    n = len(offsets) - 1
    total = offsets[n]
    global_counts = [0] * vocab_size
    for t in ids:
        global_counts[t] += 1
    sums: list[float] = []
    maxes: list[float] = []
    local_counts = [0] * vocab_size
    for i in range(n):
        lo, hi = offsets[i], offsets[i + 1]
        m = hi - lo
        if m == 0:
            sums.append(0.0)
            maxes.append(0.0)
            continue
        for j in range(lo, hi):
            local_counts[ids[j]] += 1
        denom = float(total - m + vocab_size)
        acc = 0.0
        worst = -math.inf
        for j in range(lo, hi):
            t = ids[j]
            value = -math.log((global_counts[t] - local_counts[t] + 1.0) / denom)
            acc += value
            if value > worst:
                worst = value
        for j in range(lo, hi):  # reset scratch counts
            local_counts[ids[j]] = 0
        sums.append(acc)
        maxes.append(worst)
    return sums, maxes
