"""Exact integer and rational arithmetic: Bernoulli numbers and divisor sums.

Memoized tables are guarded by a lock so concurrent readers are safe while
the first fill is serialized.
"""
from __future__ import annotations

import threading
from fractions import Fraction

from .types import DomainError

_lock = threading.Lock()
_bernoulli_cache: dict[int, Fraction] = {}
_sigma_table_cache: dict[tuple[int, int], list[int]] = {}


def _extend_bernoulli(k: int) -> None:
    # Akiyama-Tanigawa over exact rationals, O(k^2); row m yields B_m.
    A = [Fraction(0)] * (k + 1)
    for m in range(k + 1):
        A[m] = Fraction(1, m + 1)
        for j in range(m, 0, -1):
            A[j - 1] = j * (A[j - 1] - A[j])
        _bernoulli_cache[m] = A[0]


def bernoulli(k: int) -> Fraction:
    """Bernoulli number B_k for even k >= 2, exact.

    Convention fixed so that -2k/B_k is the Fourier coefficient scale of the
    weight-k series: -2*4/B_4 = 240, -2*6/B_6 = -504, -2*2/B_2 = -24.
    """
    if k % 2 != 0 or k < 2:
        raise DomainError(f"bernoulli requires even k >= 2, got {k}")
    with _lock:
        if k not in _bernoulli_cache:
            _extend_bernoulli(k)
        return _bernoulli_cache[k]


def divisor_power_sum(n: int, e: int) -> int:
    """sigma_e(n): the sum of e-th powers of the positive divisors of n."""
    if n <= 0:
        raise DomainError(f"divisor_power_sum requires n >= 1, got {n}")
    if e < 0:
        raise DomainError(f"divisor_power_sum requires e >= 0, got {e}")
    total = 0
    d = 1
    while d * d <= n:
        if n % d == 0:
            total += d ** e
            other = n // d
            if other != d:
                total += other ** e
        d += 1
    return total


def sigma_table(N: int, e: int) -> list[int]:
    """[sigma_e(1), ..., sigma_e(N)] by sieving; cached."""
    if N < 1:
        return []
    with _lock:
        cached = _sigma_table_cache.get((e, N))
        if cached is not None:
            return cached
        # reuse a longer cached table if available
        for (ee, NN), tab in _sigma_table_cache.items():
            if ee == e and NN >= N:
                out = tab[:N]
                _sigma_table_cache[(e, N)] = out
                return out
        s = [0] * (N + 1)
        for d in range(1, N + 1):
            pe = d ** e
            for m in range(d, N + 1, d):
                s[m] += pe
        out = s[1:]
        _sigma_table_cache[(e, N)] = out
        return out


def fourier_prefactor(k: int) -> Fraction:
    """-2k/B_k, the exact scale of the non-constant Fourier coefficients."""
    return Fraction(-2 * k) / bernoulli(k)
