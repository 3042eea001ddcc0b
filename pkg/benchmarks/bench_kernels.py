#!/usr/bin/env python3
"""Benchmark the compiled scoring kernels against the pure-Python fallback.

Times whole-round overlap and unigram-NLL scoring at several round shapes,
mirroring what the decoder and the replay verifier do per round. Run from the
repository root:

    python3 benchmarks/bench_kernels.py [--rounds N]
"""

from __future__ import annotations

import argparse
import random
import time
from array import array

from sampleselect import _kernels_py

try:
    from sampleselect import _kernels
except ImportError:
    _kernels = None

SHAPES = [
    # (samples per round, tokens per sample, vocabulary size)
    (5, 20, 60),       # one summarization round
    (8, 12, 20),       # acceptance fuzz shape
    (5, 200, 400),     # long sentences
    (16, 50, 300),     # wide rounds
]


def encode_round(rng: random.Random, n: int, length: int, vocab: int):
    flat = array("i")
    offsets = array("i", [0])
    for _ in range(n):
        for _ in range(length):
            flat.append(rng.randrange(vocab))
        offsets.append(len(flat))
    return flat, offsets, vocab


def bench(kernels, rounds, repeat: int) -> tuple[float, float]:
    started = time.perf_counter()
    for _ in range(repeat):
        for flat, offsets, vocab in rounds:
            kernels.overlap_numerators(flat, offsets, vocab)
    overlap = time.perf_counter() - started
    started = time.perf_counter()
    for _ in range(repeat):
        for flat, offsets, vocab in rounds:
            kernels.unigram_nll_stats(flat, offsets, vocab)
    nll = time.perf_counter() - started
    return overlap, nll


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rounds", type=int, default=200, help="rounds per shape")
    parser.add_argument("--repeat", type=int, default=5, help="timing repetitions")
    args = parser.parse_args()

    rng = random.Random(12345)
    print(f"{'shape (n x len, vocab)':<26} {'kernel':<10} {'overlap':>12} {'unigram-nll':>12} {'speedup':>9}")
    for n, length, vocab in SHAPES:
        rounds = [encode_round(rng, n, length, vocab) for _ in range(args.rounds)]
        py_overlap, py_nll = bench(_kernels_py, rounds, args.repeat)
        label = f"{n} x {length}, {vocab}"
        total = args.rounds * args.repeat
        print(
            f"{label:<26} {'python':<10} {py_overlap / total * 1e6:>10.1f}us "
            f"{py_nll / total * 1e6:>10.1f}us {'':>9}"
        )
        if _kernels is None:
            continue
        cy_overlap, cy_nll = bench(_kernels, rounds, args.repeat)
        # sanity: both implementations agree on the last round
        flat, offsets, vocab_size = rounds[-1]
        assert _kernels.overlap_numerators(flat, offsets, vocab_size) == list(
            _kernels_py.overlap_numerators(flat, offsets, vocab_size)
        )
        speedup = (py_overlap + py_nll) / (cy_overlap + cy_nll)
        print(
            f"{'':<26} {'cython':<10} {cy_overlap / total * 1e6:>10.1f}us "
            f"{cy_nll / total * 1e6:>10.1f}us {speedup:>8.1f}x"
        )
    if _kernels is None:
        print("\ncompiled kernels not built; showing the pure-Python path only")


if __name__ == "__main__":
    main()
