"""Exact matrix permanents.

``permanent_fast`` is Ryser's inclusion-exclusion formula walked in Gray-code
order, so consecutive subsets differ by one column and each step costs O(k).
``permanent_naive`` sums over all k! permutations and exists as an oracle.
``permanent_batch`` evaluates many small permanents at once with numpy and
is what the probability loops use.
"""

from __future__ import annotations

import functools
import itertools
import math

import numpy as np
from numba import njit

from .errors import InputError

__all__ = ["permanent_fast", "permanent_naive", "permanent_batch"]

# Above this size the 2**k-term sum is accumulated with Neumaier compensation.
COMPENSATION_THRESHOLD = 15
NAIVE_MAX = 10


@njit(cache=True)
def _ryser_gray(a, compensated):
    k = a.shape[0]
    row_sums = np.zeros(k, dtype=np.complex128)
    total_re = 0.0
    total_im = 0.0
    comp_re = 0.0
    comp_im = 0.0
    in_subset = np.zeros(k, dtype=np.bool_)
    sign = 1.0
    for step in range(1, 1 << k):
        # column whose membership flips between consecutive Gray codes
        col = 0
        while not (step >> col) & 1:
            col += 1
        if in_subset[col]:
            in_subset[col] = False
            for r in range(k):
                row_sums[r] -= a[r, col]
        else:
            in_subset[col] = True
            for r in range(k):
                row_sums[r] += a[r, col]
        sign = -sign
        prod = 1.0 + 0.0j
        for r in range(k):
            prod *= row_sums[r]
        term_re = sign * prod.real
        term_im = sign * prod.imag
        if compensated:
            t = total_re + term_re
            if abs(total_re) >= abs(term_re):
                comp_re += (total_re - t) + term_re
            else:
                comp_re += (term_re - t) + total_re
            total_re = t
            t = total_im + term_im
            if abs(total_im) >= abs(term_im):
                comp_im += (total_im - t) + term_im
            else:
                comp_im += (term_im - t) + total_im
            total_im = t
        else:
            total_re += term_re
            total_im += term_im
    # sign above is (-1)**|S|; Ryser's prefactor is (-1)**k
    parity = -1.0 if k % 2 else 1.0
    return parity * complex(total_re + comp_re, total_im + comp_im)


def _as_square(matrix) -> np.ndarray:
    a = np.asarray(matrix, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError(f"permanent needs a square matrix, got shape {a.shape}")
    return a


def permanent_fast(matrix) -> complex:
    """Permanent via Gray-code Ryser, O(2**k * k)."""
    a = _as_square(matrix)
    k = a.shape[0]
    if k == 0:
        return 1.0 + 0.0j
    if k == 1:
        return complex(a[0, 0])
    if k > 30:
        raise InputError(f"k={k} exceeds the supported bound of 30")
    return _ryser_gray(np.ascontiguousarray(a), k > COMPENSATION_THRESHOLD)


def permanent_naive(matrix) -> complex:
    """Permanent as the sum over all permutations; reference only."""
    a = _as_square(matrix)
    k = a.shape[0]
    if k > NAIVE_MAX:
        raise InputError(f"naive permanent limited to k <= {NAIVE_MAX}, got {k}")
    if k == 0:
        return 1.0 + 0.0j
    rows = np.arange(k)
    if k <= 9:
        return complex(np.prod(a[rows, _permutation_table(k)], axis=1).sum())
    perms = itertools.permutations(range(k))
    total = 0j
    while True:
        chunk = np.array(list(itertools.islice(perms, 362880)), dtype=np.intp)
        if chunk.size == 0:
            return complex(total)
        total += np.prod(a[rows, chunk], axis=1).sum()


@functools.lru_cache(maxsize=None)
def _permutation_table(k: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(k))), dtype=np.intp).reshape(-1, k)


_SUBSET_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _subsets(k: int) -> tuple[np.ndarray, np.ndarray]:
    if k not in _SUBSET_CACHE:
        idx = np.arange(1, 1 << k)
        masks = ((idx[:, None] >> np.arange(k)) & 1).astype(np.float64)
        signs = (-1.0) ** (k - masks.sum(axis=1))
        _SUBSET_CACHE[k] = (masks, signs)
    return _SUBSET_CACHE[k]


def permanent_batch(matrices) -> np.ndarray:
    """Permanents of a stack of k x k matrices, shape ``(..., k, k) -> (...)``.

    Intended for small k (the cost is O(2**k * k**2) per matrix).
    """
    a = np.asarray(matrices, dtype=np.complex128)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise InputError(f"expected a stack of square matrices, got shape {a.shape}")
    k = a.shape[-1]
    if k == 0:
        return np.ones(a.shape[:-2], dtype=np.complex128)
    if k > 16:
        raise InputError(f"batched permanent limited to k <= 16, got {k}")
    masks, signs = _subsets(k)
    # row sums over every column subset: (..., k rows, 2**k - 1 subsets)
    row_sums = a @ masks.T
    return np.prod(row_sums, axis=-2) @ signs


def bench(ks, rng=None, repeats: int = 1) -> list[tuple[int, float]]:
    """Wall-clock seconds of permanent_fast for random complex matrices of each size."""
    import time

    rng = np.random.default_rng(rng)
    permanent_fast(np.eye(2))  # trigger compilation outside the timed region
    out = []
    for k in ks:
        m = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
        best = math.inf
        for _ in range(repeats):
            t0 = time.perf_counter()
            permanent_fast(m)
            best = min(best, time.perf_counter() - t0)
        out.append((k, best))
    return out
