"""Invariant sweep over all small primes: Gauss sums, unit columns, Gram formula, coherence, chain."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .characters import power_gauss_sums, principal_gauss_sum, verify_gauss_identity
from .field import build_field, odd_primes_upto, valid_orders
from .matrix import build_matrix, build_paley_matrix, coherence, column_norms, welch_bound
from .rip import sample_disjoint_pair, verify_bound_chain

TOL = 1e-9
CHAIN_PAIRS = 20
CHAIN_MAX_SIZE = 3


@dataclass(frozen=True)
class Check:
    name: str
    p: int
    k: int | None
    worst: float
    tol: float
    passed: bool
    witness: str | None = None


def _check(name, p, k, worst, tol, witness=None, passed=None) -> Check:
    ok = worst <= tol if passed is None else passed
    return Check(name, p, k, float(worst), float(tol), bool(ok), None if ok else witness)


def check_prime(p: int, seed: int = 0) -> list[Check]:
    """All invariant checks for one prime ``p``."""
    field = build_field(p)
    rp = math.sqrt(p)
    out: list[Check] = []
    for k in valid_orders(p):
        # |G(chi^h)| = sqrt(p)
        devs = [abs(abs(principal_gauss_sum(field, k, h)) - rp) for h in range(1, k)]
        h_bad = int(np.argmax(devs)) + 1
        out.append(_check("gauss_magnitude", p, k, max(devs), TOL * rp, f"h={h_bad}"))

        # power sum equals the character expansion for every nonzero a
        worst, a_bad = 0.0, None
        for a in range(1, p):
            r = verify_gauss_identity(field, k, a).residual
            if r > worst:
                worst, a_bad = r, a
        out.append(_check("gauss_identity", p, k, worst, TOL * rp * k, f"a={a_bad}"))

        mat = build_matrix(field, k)
        norms = column_norms(mat)
        out.append(_check("unit_columns", p, k, float(np.max(np.abs(norms - 1))), TOL, f"col={int(np.argmax(np.abs(norms - 1)))}"))

        # <phi_i, phi_j> = G_k(a_i - a_j) / p
        G = mat.gram()
        table = power_gauss_sums(field, k) / p
        idx = np.arange(p)
        diff = np.abs(G - table[(idx[:, None] - idx[None, :]) % p])
        np.fill_diagonal(diff, 0.0)
        i, j = np.unravel_index(int(np.argmax(diff)), diff.shape)
        out.append(_check("gram_formula", p, k, float(diff.max()), TOL, f"pair=({i},{j})"))

        mu, pair = coherence(mat)
        out.append(_check("coherence_upper", p, k, mu - (k - 1) / rp, TOL, f"pair={pair}"))
        if k == 2:
            out.append(_check("coherence_k2", p, k, abs(mu - 1 / rp), TOL, f"mu={mu!r}"))
        out.append(_check("welch", p, k, welch_bound(mat.M, mat.N) - mu, TOL, f"mu={mu!r}"))

        worst, bad = 0.0, None
        for t in range(CHAIN_PAIRS):
            I, J = sample_disjoint_pair(np.random.default_rng(seed ^ t), p, CHAIN_MAX_SIZE)
            rep = verify_bound_chain(mat, I, J)
            # normalized excess over the allowed slack on each of the three steps
            excess = max(rep.eq_ab_residual, -rep.triangle_slack, rep.eq_cd_residual) / rep.scale
            if excess > worst or not rep.holds:
                worst, bad = max(worst, excess), f"I={I} J={J}"
        out.append(_check("bound_chain", p, k, worst, TOL, bad))

    paley = build_paley_matrix(field)
    norms = column_norms(paley)
    out.append(_check("unit_columns_paley", p, 2, float(np.max(np.abs(norms - 1))), TOL))
    mu, pair = coherence(paley)
    out.append(_check("welch_paley", p, 2, welch_bound(paley.M, paley.N) - mu, TOL, f"pair={pair}"))
    return out


@dataclass(frozen=True)
class SuiteReport:
    p_max: int
    primes: tuple[int, ...]
    checks_run: int
    failures: tuple[Check, ...]
    worst_by_check: dict
    passed: bool


def verify_suite(p_max: int, threads: int = 1, seed: int = 0) -> SuiteReport:
    """Run :func:`check_prime` for every odd prime ``<= p_max``; output order is by ``p``."""
    primes = odd_primes_upto(p_max)
    if threads > 1 and len(primes) > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(check_prime, primes, [seed] * len(primes)))
    else:
        results = [check_prime(p, seed) for p in primes]
    checks = [c for res in results for c in res]
    worst: dict[str, float] = {}
    for c in checks:
        ratio = c.worst / c.tol if c.tol > 0 else c.worst
        worst[c.name] = max(worst.get(c.name, -math.inf), ratio)
    failures = tuple(c for c in checks if not c.passed)
    return SuiteReport(
        p_max=int(p_max),
        primes=tuple(primes),
        checks_run=len(checks),
        failures=failures,
        worst_by_check={name: worst[name] for name in sorted(worst)},
        passed=not failures,
    )
