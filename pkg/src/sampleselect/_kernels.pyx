# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled scoring kernels; semantics mirror _kernels_py exactly.

See _kernels_py for the encoding contract. Operation order in the NLL sums
matches the pure version so results agree to the last ulp.
"""

from libc.math cimport log
from libc.stdlib cimport calloc, free

BACKEND = "cython"


def overlap_numerators(int[:] ids, int[:] offsets, int vocab_size):
    """For each sample, the sum over its tokens of how many samples' token sets
    contain that token (the sample itself included)."""
    cdef Py_ssize_t n = offsets.shape[0] - 1
    cdef unsigned char *contains = <unsigned char *> calloc(<size_t> vocab_size * n, 1)
    cdef int *counts = <int *> calloc(<size_t> vocab_size, sizeof(int))
    if contains == NULL or counts == NULL:
        if contains != NULL:
            free(contains)
        if counts != NULL:
            free(counts)
        raise MemoryError()
    cdef Py_ssize_t i, j
    cdef int t
    cdef long long acc
    result = []
    try:
        for i in range(n):
            for j in range(offsets[i], offsets[i + 1]):
                t = ids[j]
                if not contains[<size_t> t * n + i]:
                    contains[<size_t> t * n + i] = 1
                    counts[t] += 1
        for i in range(n):
            acc = 0
            for j in range(offsets[i], offsets[i + 1]):
                acc += counts[ids[j]]
            result.append(acc)
    finally:
        free(contains)
        free(counts)
    return result


def unigram_nll_stats(int[:] ids, int[:] offsets, int vocab_size):
    """Per sample: (sum, max) over its tokens of -ln p(token), where p is an
    add-one smoothed unigram model of the other samples' token multiset."""
    cdef Py_ssize_t n = offsets.shape[0] - 1
    cdef long long total = offsets[n]
    cdef int *global_counts = <int *> calloc(<size_t> vocab_size, sizeof(int))
    cdef int *local_counts = <int *> calloc(<size_t> vocab_size, sizeof(int))
    if global_counts == NULL or local_counts == NULL:
        if global_counts != NULL:
            free(global_counts)
        if local_counts != NULL:
            free(local_counts)
        raise MemoryError()
    cdef Py_ssize_t i, j, lo, hi
    cdef int t
    cdef long long m
    cdef double denom, acc, worst, value
    sums = []
    maxes = []
    try:
        for j in range(total):
            global_counts[ids[j]] += 1
        for i in range(n):
            lo = offsets[i]
            hi = offsets[i + 1]
            m = hi - lo
            if m == 0:
                sums.append(0.0)
                maxes.append(0.0)
                continue
            for j in range(lo, hi):
                local_counts[ids[j]] += 1
            denom = <double> (total - m + vocab_size)
            acc = 0.0
            worst = -1e308
            for j in range(lo, hi):
                t = ids[j]
                value = -log((global_counts[t] - local_counts[t] + 1.0) / denom)
                acc += value
                if value > worst:
                    worst = value
            for j in range(lo, hi):
                local_counts[ids[j]] = 0
            sums.append(acc)
            maxes.append(worst)
    finally:
        free(global_counts)
        free(local_counts)
    return sums, maxes
