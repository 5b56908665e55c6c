"""Additive and multiplicative characters of F_p and their Gauss sums.

Angles are reduced with integer arithmetic before any floating-point work:
``psi(x)`` looks up ``exp(2*pi*i*r/p)`` for ``r = x mod p`` and ``chi(x)``
looks up ``exp(2*pi*i*r/k)`` for ``r = h*dlog(x) mod k``. Equal angles
therefore give bit-identical values. Sums of ``p`` terms are accumulated
with ``math.fsum`` on each component, so they do not depend on term order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .field import PrimeField, build_field, check_divisor


@lru_cache(maxsize=None)
def _unit_roots(n: int) -> np.ndarray:
    """``exp(2*pi*i*r/n)`` for ``r = 0..n-1``; read-only."""
    r = np.arange(n, dtype=np.float64)
    roots = np.exp(2j * np.pi * r / n)
    roots.flags.writeable = False
    return roots


def csum(values) -> complex:
    """Correctly rounded sum of complex values (component-wise fsum)."""
    values = np.asarray(values, dtype=np.complex128).ravel()
    return complex(math.fsum(values.real), math.fsum(values.imag))


def additive_table(field: PrimeField) -> np.ndarray:
    """``psi(x)`` for ``x = 0..p-1``."""
    return _unit_roots(field.p)


def additive_char(field: PrimeField, x: int) -> complex:
    """Canonical additive character ``exp(2*pi*i*x/p)``."""
    return complex(_unit_roots(field.p)[int(x) % field.p])


@dataclass(frozen=True)
class MultCharSpec:
    """Multiplicative character of order dividing ``k``: ``g**t -> exp(2*pi*i*h*t/k)``.

    ``h`` may be any integer (negative exponents give the conjugate
    character); ``h % k == 0`` is the trivial character.
    """

    field: PrimeField
    k: int
    h: int = 1

    def __post_init__(self) -> None:
        check_divisor(self.field.p, self.k)

    @property
    def p(self) -> int:
        return self.field.p

    @property
    def is_trivial(self) -> bool:
        return self.h % self.k == 0

    def inverse(self) -> "MultCharSpec":
        return MultCharSpec(self.field, self.k, -self.h)

    def require_nontrivial(self, where: str) -> None:
        if self.is_trivial:
            raise ValueError(f"{where} requires a non-trivial character (h={self.h}, k={self.k})")

    def table(self) -> np.ndarray:
        """Values at ``x = 0..p-1``, with 0 at ``x = 0``."""
        return _char_table(self.field.p, self.k, self.h % self.k)

    def __call__(self, x: int) -> complex:
        return mult_char(self, x)


@lru_cache(maxsize=4096)
def _char_table(p: int, k: int, h: int) -> np.ndarray:
    field = build_field(p)
    out = np.zeros(p, dtype=np.complex128)
    exps = (h * field.dlog[1:]) % k
    out[1:] = _unit_roots(k)[exps]
    out.flags.writeable = False
    return out


def mult_char(spec: MultCharSpec, x: int) -> complex:
    """Evaluate the character at ``x``; zero at ``x = 0``."""
    x = int(x) % spec.p
    if x == 0:
        return 0j
    r = (spec.h * int(spec.field.dlog[x])) % spec.k
    return complex(_unit_roots(spec.k)[r])


def gauss_sum(spec: MultCharSpec, a: int = 1) -> complex:
    """``G(a, chi) = sum_x chi(x) psi(a x)`` by direct p-term summation."""
    p = spec.p
    x = np.arange(p, dtype=np.int64)
    terms = spec.table() * _unit_roots(p)[(int(a) % p) * x % p]
    return csum(terms)


@lru_cache(maxsize=4096)
def _principal_gauss_sum(p: int, k: int, h: int) -> complex:
    return gauss_sum(MultCharSpec(build_field(p), k, h), 1)


def principal_gauss_sum(field: PrimeField, k: int, h: int) -> complex:
    """``G(chi_k^h) = G(1, chi_k^h)``, cached per ``(p, k, h mod k)``."""
    check_divisor(field.p, k)
    return _principal_gauss_sum(field.p, k, h % k)


def power_gauss_sum(field: PrimeField, k: int, a: int) -> complex:
    """k-th power Gauss sum ``sum_x psi(a x^k)`` by direct summation."""
    p = field.p
    k = check_divisor(p, k)
    xk = _kth_powers(p, k)
    return csum(_unit_roots(p)[(int(a) % p) * xk % p])


@lru_cache(maxsize=1024)
def _kth_powers(p: int, k: int) -> np.ndarray:
    xs = np.array([pow(x, k, p) for x in range(p)], dtype=np.int64)
    xs.flags.writeable = False
    return xs


def power_gauss_sums(field: PrimeField, k: int) -> np.ndarray:
    """``G_k(a)`` for every ``a = 0..p-1`` in one vectorized pass."""
    p = field.p
    k = check_divisor(p, k)
    xk = _kth_powers(p, k)
    a = np.arange(p, dtype=np.int64)[:, None]
    return _unit_roots(p)[(a * xk[None, :]) % p].sum(axis=1)


@dataclass(frozen=True)
class GaussIdentityCheck:
    """Residuals of ``G_k(a) = sum_h G(a, chi^h) = sum_h chi^{-h}(a) G(chi^h)``.

    ``residual`` compares the power sum with the conjugate-character form,
    ``direct_residual`` compares it with the ``G(a, chi^h)`` form, and
    ``form_gap`` is the distance between the two character forms.
    """

    p: int
    k: int
    a: int
    power_sum: complex
    residual: float
    direct_residual: float
    form_gap: float


def verify_gauss_identity(field: PrimeField, k: int, a: int) -> GaussIdentityCheck:
    p = field.p
    k = check_divisor(p, k)
    a = int(a) % p
    if a == 0:
        raise ValueError("the power-sum/Gauss-sum identity needs a != 0 (a in F_p^*)")
    gk = power_gauss_sum(field, k, a)
    direct = [gauss_sum(MultCharSpec(field, k, h), a) for h in range(1, k)]
    twisted = [
        mult_char(MultCharSpec(field, k, -h), a) * principal_gauss_sum(field, k, h)
        for h in range(1, k)
    ]
    direct_total = csum(direct) if direct else 0j
    twisted_total = csum(twisted) if twisted else 0j
    return GaussIdentityCheck(
        p=p,
        k=k,
        a=a,
        power_sum=gk,
        residual=abs(gk - twisted_total),
        direct_residual=abs(gk - direct_total),
        form_gap=abs(direct_total - twisted_total),
    )
