"""Prime generation for moduli selection (segmented sieve over numpy)."""

from __future__ import annotations

import math
from typing import Callable, Iterator

import numpy as np

_SEGMENT = 1 << 22


def small_primes(limit: int) -> np.ndarray:
    """All primes <= limit."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(limit + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    return np.flatnonzero(sieve).astype(np.int64)


def primes_from(start: int) -> Iterator[np.ndarray]:
    """Yield ascending blocks of consecutive primes >= start, forever.

    Segments start small and double up to ``_SEGMENT``.
    """
    lo = max(start, 2)
    base = small_primes(1 << 12)
    width = 1 << 12
    while True:
        hi = lo + width
        width = min(2 * width, _SEGMENT)
        root = math.isqrt(hi) + 1
        if root > int(base[-1]):
            base = small_primes(2 * root)
        seg = np.ones(hi - lo, dtype=bool)
        for p in base:
            p = int(p)
            if p * p >= hi:
                break
            first = max(p * p, -(-lo // p) * p)
            seg[first - lo :: p] = False
        if lo < 2:
            seg[: 2 - lo] = False
        yield np.flatnonzero(seg).astype(np.int64) + lo
        lo = hi


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin for n < 3.3e24, trial division below."""
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41):
        if n % p == 0:
            return n == p
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def primes_above(
    bound: int,
    count: int,
    accept: Callable[[np.ndarray], np.ndarray] | None = None,
) -> np.ndarray:
    """First ``count`` primes strictly greater than ``bound``, as int64.

    ``accept`` maps an array of candidate primes to a boolean mask; rejected
    primes are skipped.
    """
    chunks: list[np.ndarray] = []
    have = 0
    if count > 0:
        for block in primes_from(bound + 1):
            if accept is not None and len(block):
                block = block[accept(block)]
            block = block[: count - have]
            chunks.append(block)
            have += len(block)
            if have >= count:
                break
    if not chunks:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate(chunks)
