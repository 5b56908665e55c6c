"""Primes p whose shifted value p-1 has a divisor in a prescribed window (x^eps1, x^eps2]."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .field import divisors_from_factorization, integer_root

SIEVE_LIMIT = 10**8
MIN_DENSITY_X = 10


def sieve_primes(x: int) -> list[int]:
    """All primes ``<= x`` (Eratosthenes)."""
    x = int(x)
    if x < 2:
        raise ValueError(f"sieve needs x >= 2, got {x}")
    if x > SIEVE_LIMIT:
        raise ValueError(f"x={x} exceeds the sieve budget {SIEVE_LIMIT}")
    flags = np.ones(x + 1, dtype=bool)
    flags[:2] = False
    for q in range(2, math.isqrt(x) + 1):
        if flags[q]:
            flags[q * q :: q] = False
    return np.flatnonzero(flags).tolist()


def smallest_prime_factors(n: int) -> np.ndarray:
    """``spf[m]`` = least prime factor of ``m`` for ``2 <= m <= n``."""
    spf = np.zeros(n + 1, dtype=np.int64)
    for q in range(2, math.isqrt(n) + 1):
        if spf[q] == 0:
            block = spf[q * q :: q]
            block[block == 0] = q
    rest = np.flatnonzero(spf == 0)
    spf[rest] = rest
    return spf


def _factor_with_spf(m: int, spf: np.ndarray) -> dict[int, int]:
    out: dict[int, int] = {}
    while m > 1:
        q = int(spf[m])
        out[q] = out.get(q, 0) + 1
        m //= q
    return out


def floor_power(x: int, eps: float) -> int:
    """``floor(x ** eps)``, exact whenever the real value is within 1e-9 of an integer."""
    val = float(x) ** float(eps)
    n = round(val)
    if abs(val - n) > 1e-9:
        return math.floor(val)
    frac = Fraction(float(eps)).limit_denominator(10**6)
    return integer_root(int(x) ** frac.numerator, frac.denominator)


@dataclass(frozen=True)
class ShiftedPrimeHit:
    p: int
    k: int
    all_valid_factors: tuple[int, ...]


def _check_eps(eps1: float, eps2: float) -> None:
    if not 0 <= eps1 < eps2 <= 1:
        raise ValueError(f"need 0 <= eps1 < eps2 <= 1, got eps1={eps1}, eps2={eps2}")


def factor_window(x: int, eps1: float, eps2: float) -> tuple[int, int]:
    """Integer bounds ``(lo, hi)`` such that ``lo < k <= hi`` iff ``x**eps1 < k <= x**eps2``."""
    _check_eps(eps1, eps2)
    return floor_power(x, eps1), floor_power(x, eps2)


def primes_with_factor_in_range(x: int, eps1: float, eps2: float) -> list[ShiftedPrimeHit]:
    """Odd primes ``p <= x`` with some divisor ``k`` of ``p-1`` in ``(x**eps1, x**eps2]``, ascending."""
    lo, hi = factor_window(x, eps1, eps2)
    if int(x) < 3:
        return []
    primes = sieve_primes(x)
    spf = smallest_prime_factors(int(x))
    hits = []
    for p in primes[1:]:
        divs = divisors_from_factorization(_factor_with_spf(p - 1, spf))
        valid = tuple(d for d in divs if lo < d <= hi)
        if valid:
            hits.append(ShiftedPrimeHit(p=p, k=valid[0], all_valid_factors=valid))
    return hits


@dataclass(frozen=True)
class DensityRow:
    x: int
    eps1: float
    eps2: float
    hits: int
    x_over_logx: float
    ratio: float


def shifted_prime_density_report(x_values, eps1: float, eps2: float) -> list[DensityRow]:
    """Hit counts against ``x / ln x``; the ratio is an empirical constant only."""
    _check_eps(eps1, eps2)
    rows = []
    for x in x_values:
        x = int(x)
        if x < MIN_DENSITY_X:
            raise ValueError(f"density report needs x >= {MIN_DENSITY_X}, got {x}")
        hits = len(primes_with_factor_in_range(x, eps1, eps2))
        base = x / math.log(x)
        rows.append(DensityRow(x=x, eps1=eps1, eps2=eps2, hits=hits, x_over_logx=base, ratio=hits / base))
    return rows


DENSITY_CSV_HEADER = ("x", "eps1", "eps2", "hits", "x_over_logx", "ratio")
HITS_CSV_HEADER = ("p", "k")
