"""Exact arithmetic in the prime field F_p.

Primality, primitive roots, discrete-log tables, divisors and the sets of
nonzero k-th powers that label the rows of the sensing matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from math import isqrt

import numpy as np

# Deterministic Miller-Rabin: these bases are exact for every n < 3.3e24.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
_MAX_PRIME_INPUT = 1 << 64
_MAX_FIELD_P = 10**7


def is_prime(n: int) -> bool:
    """Deterministic primality test for ``1 <= n < 2**64``."""
    n = int(n)
    if n < 1:
        raise ValueError(f"is_prime expects n >= 1, got {n}")
    if n >= _MAX_PRIME_INPUT:
        raise ValueError(f"is_prime supports n < 2**64, got {n}")
    if n < 2:
        return False
    for q in _MR_BASES:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def factorize(n: int) -> dict[int, int]:
    """Prime factorization of ``n >= 1`` by trial division, as ``{prime: exponent}``."""
    n = int(n)
    if n < 1:
        raise ValueError(f"factorize expects n >= 1, got {n}")
    out: dict[int, int] = {}
    for q in (2, 3):
        while n % q == 0:
            out[q] = out.get(q, 0) + 1
            n //= q
    q = 5
    while q * q <= n:
        for r in (q, q + 2):
            while n % r == 0:
                out[r] = out.get(r, 0) + 1
                n //= r
        q += 6
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def divisors_from_factorization(fac: dict[int, int]) -> list[int]:
    divs = [1]
    for q, e in fac.items():
        divs = [d * q**j for d in divs for j in range(e + 1)]
    return sorted(divs)


def divisors(n: int) -> list[int]:
    """All positive divisors of ``n``, ascending."""
    return divisors_from_factorization(factorize(n))


def _require_odd_prime(p: int) -> int:
    p = int(p)
    if p < 3 or not is_prime(p):
        raise ValueError(f"p not prime: expected an odd prime, got {p}")
    return p


def primitive_root(p: int) -> int:
    """Smallest positive generator of the multiplicative group mod ``p``."""
    p = _require_odd_prime(p)
    qs = list(factorize(p - 1))
    for g in range(2, p):
        if all(pow(g, (p - 1) // q, p) != 1 for q in qs):
            return g
    raise AssertionError("unreachable: every prime has a primitive root")


@dataclass(frozen=True, eq=False)
class PrimeField:
    """F_p with a fixed generator and a full discrete-log table.

    ``dlog[x]`` is the exponent t with ``g**t == x (mod p)`` for ``1 <= x < p``;
    ``dlog[0]`` holds the sentinel -1. ``powers[t] == g**t mod p`` for
    ``0 <= t < p - 1``.
    """

    p: int
    g: int
    dlog: np.ndarray = dc_field(repr=False)
    powers: np.ndarray = dc_field(repr=False)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PrimeField):
            return NotImplemented
        return (self.p, self.g) == (other.p, other.g)

    def __hash__(self) -> int:
        return hash((self.p, self.g))

    @property
    def order(self) -> int:
        return self.p - 1

    def log(self, x: int) -> int:
        x = int(x) % self.p
        if x == 0:
            raise ValueError("discrete log of 0 is undefined")
        return int(self.dlog[x])


@lru_cache(maxsize=64)
def build_field(p: int) -> PrimeField:
    """Build F_p with its smallest primitive root and discrete-log table.

    Results are cached per ``p``; the arrays are read-only.
    """
    p = _require_odd_prime(p)
    if p > _MAX_FIELD_P:
        raise ValueError(f"p={p} exceeds the table budget ({_MAX_FIELD_P})")
    g = primitive_root(p)
    powers = np.empty(p - 1, dtype=np.int64)
    dlog = np.full(p, -1, dtype=np.int64)
    x = 1
    for t in range(p - 1):
        powers[t] = x
        dlog[x] = t
        x = x * g % p
    powers.flags.writeable = False
    dlog.flags.writeable = False
    return PrimeField(p=p, g=g, dlog=dlog, powers=powers)


@dataclass(frozen=True)
class ResidueSet:
    """The nonzero k-th powers of F_p, strictly increasing."""

    p: int
    k: int
    elements: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, x: object) -> bool:
        return isinstance(x, (int, np.integer)) and int(x) % self.p in self._members

    @property
    def _members(self) -> frozenset[int]:
        return frozenset(self.elements)


def check_divisor(p: int, k: int) -> int:
    k = int(k)
    if k < 1 or (p - 1) % k:
        raise ValueError(f"k={k} does not divide p-1={p - 1}")
    return k


def kth_power_residues(field: PrimeField, k: int) -> ResidueSet:
    """Sorted set of nonzero k-th powers: ``{g**(k*t) : 0 <= t < (p-1)/k}``."""
    k = check_divisor(field.p, k)
    # x^k runs over exactly the subgroup generated by g^k.
    elems = np.sort(field.powers[::k])
    return ResidueSet(p=field.p, k=k, elements=tuple(int(b) for b in elems))


def valid_orders(p: int) -> list[int]:
    """Divisors k of p-1 with 2 <= k <= p-2 (orders of usable nontrivial characters)."""
    return [k for k in divisors(p - 1) if 2 <= k <= p - 2]


def odd_primes_upto(n: int) -> list[int]:
    return [q for q in range(3, int(n) + 1, 2) if is_prime(q)]


def integer_root(n: int, r: int) -> int:
    """floor(n ** (1/r)) computed exactly for integers ``n >= 0``, ``r >= 1``."""
    if n < 0 or r < 1:
        raise ValueError("integer_root expects n >= 0 and r >= 1")
    if r == 1 or n < 2:
        return n
    if r == 2:
        return isqrt(n)
    x = int(round(n ** (1.0 / r))) if n.bit_length() < 1000 else 1 << (n.bit_length() // r + 1)
    # Newton correction from any starting point.
    while x**r > n:
        x -= max(1, (x**r - n) // (r * x ** (r - 1)))
    while (x + 1) ** r <= n:
        x += 1
    return x
