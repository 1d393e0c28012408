"""Weighted-ratio string similarity built on Levenshtein distance.

The composite mirrors the usual WRatio recipe but is fully specified here so
scores are reproducible:

* ``ratio``: ``round(100 * (1 - lev(a, b) / max(len(a), len(b))))``
* ``token_sort_ratio``: ``ratio`` after sorting whitespace tokens
* ``partial_ratio``: best ``ratio`` of the shorter string against every
  equal-length window of the longer one, used only when the longer string is
  more than 1.5 times the shorter, and scaled by 0.9

All rounding is half-up on exact integer arithmetic. Only identical
normalized strings score 100; anything else is capped at 99.
"""
from __future__ import annotations

from functools import lru_cache

from .roster import normalize_name

PARTIAL_LENGTH_RATIO = 1.5
PARTIAL_SCALE_TENTHS = 9


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def _round_ratio(num: int, den: int) -> int:
    """round_half_up(100 * num / den)"""
    return (200 * num + den) // (2 * den)


def ratio(a: str, b: str) -> int:
    longest = max(len(a), len(b))
    if longest == 0:
        return 0
    return _round_ratio(longest - levenshtein(a, b), longest)


def token_sort_ratio(a: str, b: str) -> int:
    return ratio(" ".join(sorted(a.split())), " ".join(sorted(b.split())))


def partial_ratio(a: str, b: str) -> int:
    short, long_ = (a, b) if len(a) <= len(b) else (b, a)
    if not short:
        return 0
    n = len(short)
    return max(ratio(short, long_[i:i + n]) for i in range(len(long_) - n + 1))


@lru_cache(maxsize=65536)
def similarity(a: str, b: str) -> int:
    """Symmetric 0-100 similarity of two names after normalization."""
    a, b = normalize_name(a), normalize_name(b)
    if not a and not b:
        return 0
    if a == b:
        return 100
    score = max(ratio(a, b), token_sort_ratio(a, b))
    short, long_ = sorted((len(a), len(b)))
    # length ratio > 1.5, compared without floats
    if short and 2 * long_ > 3 * short:
        partial = partial_ratio(a, b)
        score = max(score, (PARTIAL_SCALE_TENTHS * partial + 5) // 10)
    return min(score, 99)
