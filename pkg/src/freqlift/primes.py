"""Segmented prime sieving, smallest-prime-factor tables, and prime
reciprocal sums over ranges.

Segments are independent numpy arrays, so memory stays flat regardless of
how far out the pipeline scans; finished tables are immutable.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import isqrt

import numpy as np

from .errors import RangeTooLarge

#: hard ceiling on sieve endpoints
MAX_HI = 10**12
#: default segment budget (entries per segment)
SEGMENT_BUDGET = 1 << 22

_base_primes_cache: dict[int, np.ndarray] = {}


def _base_primes(limit: int) -> np.ndarray:
    """Primes <= limit via a plain sieve; cached by rounded-up limit."""
    key = max(1 << max(limit - 1, 1).bit_length(), 64)
    cached = _base_primes_cache.get(key)
    if cached is not None:
        return cached[cached <= limit]
    sieve = np.ones(key + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, isqrt(key) + 1):
        if sieve[p]:
            sieve[p * p :: p] = False
    primes = np.flatnonzero(sieve)
    _base_primes_cache[key] = primes
    return primes[primes <= limit]


def _check_range(lo: int, hi: int, budget: int | None = None):
    if hi > MAX_HI:
        raise RangeTooLarge(f"hi={hi} exceeds the configured maximum {MAX_HI}")
    if budget is not None and hi - lo + 1 > budget:
        raise RangeTooLarge(f"segment of {hi - lo + 1} entries exceeds budget {budget}")


def primes_in(lo: int, hi: int) -> list[int]:
    """Sorted list of primes in [lo, hi] (inclusive)."""
    if lo < 2:
        lo = 2
    if hi < lo:
        return []
    _check_range(lo, hi)
    out: list[int] = []
    base = _base_primes(isqrt(hi))
    for seg_lo in range(lo, hi + 1, SEGMENT_BUDGET):
        seg_hi = min(seg_lo + SEGMENT_BUDGET - 1, hi)
        flags = np.ones(seg_hi - seg_lo + 1, dtype=bool)
        for p in base:
            p = int(p)
            start = max(p * p, ((seg_lo + p - 1) // p) * p)
            if start > seg_hi:
                continue
            flags[start - seg_lo :: p] = False
        if seg_lo <= 1:
            flags[: 2 - seg_lo] = False
        out.extend((np.flatnonzero(flags) + seg_lo).tolist())
    return out


@dataclass(frozen=True)
class SpfSegment:
    """Smallest-prime-factor table for the integers lo..hi inclusive.

    table[n - lo] is the least prime dividing n; equals n exactly when n
    is prime.
    """

    lo: int
    hi: int
    table: np.ndarray

    def spf(self, n: int) -> int:
        if not self.lo <= n <= self.hi:
            raise IndexError(f"{n} outside segment [{self.lo}, {self.hi}]")
        return int(self.table[n - self.lo])

    def factor(self, n: int) -> list[tuple[int, int]]:
        """Prime factorization of n by repeated SPF division.

        Works when every quotient stays inside the segment or the segment
        starts at 2; intended for n within small segments.
        """
        out: list[tuple[int, int]] = []
        while n > 1:
            p = self.spf(n)
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        return out


def spf_segment(lo: int, hi: int, budget: int = SEGMENT_BUDGET) -> SpfSegment:
    """Build the SPF table for [lo, hi]."""
    if lo < 2:
        raise ValueError("lo must be >= 2")
    if hi < lo:
        raise ValueError("empty segment")
    _check_range(lo, hi, budget)
    n = np.arange(lo, hi + 1, dtype=np.int64)
    table = np.zeros(hi - lo + 1, dtype=np.int64)
    for p in _base_primes(isqrt(hi)):
        p = int(p)
        start = ((lo + p - 1) // p) * p
        if start > hi:
            continue
        view = table[start - lo :: p]
        view[view == 0] = p
    rem = table == 0
    table[rem] = n[rem]  # untouched entries have no factor <= sqrt(hi): prime
    return SpfSegment(lo, hi, table)


def mertens_sum(lo: int, hi: int) -> float:
    """Sum of 1/p over primes lo <= p <= hi (0.0 when the range is empty)."""
    ps = primes_in(lo, hi)
    if not ps:
        return 0.0
    return float(np.sum(1.0 / np.asarray(ps, dtype=np.float64)))
