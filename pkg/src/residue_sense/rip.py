"""Flat-RIP and RIP measurement, character double sums, and the proof-chain checks.

Index sets are 0-based column indices. Exhaustive searches are certificates.
Sampled searches only give lower bounds. Double-sum bounds conjectured for
large ``p`` are tested here as small-``p`` instances, so every double-sum
report carries ``asymptotic_caveat = True``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from .characters import MultCharSpec, csum, principal_gauss_sum
from .field import PrimeField, build_field
from .matrix import TIE_TOL, SensingMatrix, Variant, argmax_with_ties
from .reporting import BudgetExceeded, enumeration_budget

CHECK_TOL = 1e-9


# --- parameters -----------------------------------------------------------


@dataclass(frozen=True)
class AnalysisParams:
    alpha: float
    beta0: float
    eps1: float
    eps2: float
    tau: float


@dataclass(frozen=True)
class ParamCheck:
    ok: bool
    gamma: float | None
    tau_interval: tuple[float, float]
    diagnostics: tuple[str, ...]


def tau_interval(alpha: float, beta0: float, eps1: float, eps2: float) -> tuple[float, float]:
    """Open interval of admissible ``tau``: ``(max(alpha+beta0, (1-eps1)/2 - beta0), 1/2 - eps2)``."""
    return max(alpha + beta0, (1 - eps1) / 2 - beta0), 0.5 - eps2


def base_conditions(alpha: float, beta0: float, eps1: float, eps2: float) -> list[str]:
    """Names of the violated conditions among 0<alpha<1/2, alpha+2*beta0<1/2, 0<=eps1<eps2<beta0."""
    bad = []
    if not 0 < alpha < 0.5:
        bad.append("condition 1: 0 < alpha < 1/2")
    if not beta0 > 0:
        bad.append("condition 2: beta0 > 0")
    if not alpha + 2 * beta0 < 0.5:
        bad.append("condition 2: alpha + 2*beta0 < 1/2")
    if not 0 <= eps1:
        bad.append("condition 3: 0 <= eps1")
    if not eps1 < eps2:
        bad.append("condition 3: eps1 < eps2")
    if not eps2 < beta0:
        bad.append("condition 3: eps2 < beta0")
    return bad


def validate_params(params: AnalysisParams, p: int | None = None, k: int | None = None) -> ParamCheck:
    """Check the parameter conditions and the tau window, and derive ``gamma = (tau+beta0)/(1-eps1)``.

    When ``p`` and ``k`` are both given, condition 4 is checked as well:
    ``k | p-1`` and ``p**eps1 < k <= p**eps2``.
    """
    a, b0, e1, e2, tau = params.alpha, params.beta0, params.eps1, params.eps2, params.tau
    bad = base_conditions(a, b0, e1, e2)
    lo, hi = tau_interval(a, b0, e1, e2)
    if not a + b0 < tau:
        bad.append("tau window: alpha + beta0 < tau")
    if not (1 - e1) / 2 - b0 < tau:
        bad.append("tau window: (1-eps1)/2 - beta0 < tau")
    if not tau < 0.5 - e2:
        bad.append("tau window: tau < 1/2 - eps2")
    if p is not None and k is not None:
        if (p - 1) % k:
            bad.append("condition 4: k divides p-1")
        if not p**e1 < k:
            bad.append("condition 4: p^eps1 < k")
        if not k <= p**e2:
            bad.append("condition 4: k <= p^eps2")
    gamma = None
    if e1 < 1:
        gamma = (tau + b0) / (1 - e1)
        if not bad and not gamma > 0.5:
            bad.append("derived: gamma > 1/2")
    return ParamCheck(ok=not bad, gamma=gamma, tau_interval=(lo, hi), diagnostics=tuple(bad))


# --- flat RIP ---------------------------------------------------------------


@dataclass(frozen=True)
class FlatRipReport:
    K: int
    theta: float
    witness_I: tuple[int, ...]
    witness_J: tuple[int, ...]
    mode: str
    trials: int | None = None
    seed: int | None = None
    lower_bound_only: bool = False
    evaluated: int = 0


def flat_ratio(matrix: SensingMatrix, I, J) -> float:
    """``|<sum_I phi_i, sum_J phi_j>| / sqrt(|I| |J|)`` from the matrix entries."""
    I, J = list(I), list(J)
    u = matrix.entries[:, I].sum(axis=1)
    v = matrix.entries[:, J].sum(axis=1)
    return abs(complex(np.sum(u * v.conj()))) / math.sqrt(len(I) * len(J))


def flat_rip_pair_count(N: int, K: int) -> int:
    """Number of ordered disjoint pairs ``(I, J)`` with ``1 <= |I|, |J| <= K``."""
    return sum(comb(N, a) * comb(N - a, b) for a in range(1, K + 1) for b in range(1, K + 1))


class _NearMax:
    """Running maximum that remembers every key within ``tol`` of it."""

    def __init__(self, tol: float = TIE_TOL) -> None:
        self.tol = tol
        self.best = -math.inf
        self.cands: list[tuple[float, tuple]] = []

    def offer(self, values: np.ndarray, keys) -> None:
        if values.size == 0:
            return
        top = float(values.max())
        if top < self.best - self.tol:
            return
        if top > self.best:
            self.best = top
            self.cands = [(v, key) for v, key in self.cands if v >= top - self.tol]
        for idx in np.flatnonzero(values >= self.best - self.tol):
            self.cands.append((float(values[idx]), keys(int(idx))))

    def witness(self) -> tuple:
        return min(key for v, key in self.cands if v >= self.best - self.tol)


def _combos(N: int, b: int) -> np.ndarray:
    return np.array(list(combinations(range(N), b)), dtype=np.int64).reshape(-1, b)


def flat_rip_exhaustive(matrix: SensingMatrix, K: int, budget: int | None = None) -> FlatRipReport:
    """Exact flat-RIP constant over all disjoint nonempty ``I, J`` with sizes at most ``K``."""
    K = int(K)
    if K < 1:
        raise ValueError("K must be >= 1")
    N = matrix.N
    Kc = min(K, N - 1)
    limit = enumeration_budget(budget)
    count = flat_rip_pair_count(N, Kc)
    if count > limit:
        raise BudgetExceeded(
            f"flat RIP enumeration needs {count} pair evaluations (budget {limit}); use sampled mode"
        )
    G = matrix.gram()
    combos = {b: _combos(N, b) for b in range(1, Kc + 1)}
    member = {}
    for b, cs in combos.items():
        m = np.zeros((len(cs), N), dtype=bool)
        m[np.arange(len(cs))[:, None], cs] = True
        member[b] = m
    tracker = _NearMax()
    for a in range(1, Kc + 1):
        for I in combos[a]:
            row = G[I, :].sum(axis=0)
            I_key = tuple(int(i) for i in I)
            for b in range(1, min(Kc, N - a) + 1):
                Js = combos[b]
                keep = ~member[b][:, I].any(axis=1)
                Js = Js[keep]
                vals = np.abs(row[Js].sum(axis=1)) / math.sqrt(a * b)
                tracker.offer(vals, lambda idx, Js=Js: (I_key, tuple(int(j) for j in Js[idx])))
    I_w, J_w = tracker.witness()
    return FlatRipReport(
        K=K,
        theta=tracker.best,
        witness_I=I_w,
        witness_J=J_w,
        mode="exhaustive",
        evaluated=count,
    )


def sample_disjoint_pair(rng: np.random.Generator, N: int, K: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Sizes uniform in ``[1, K]`` (capped so both fit), then ``|I|+|J|`` distinct indices split in two."""
    if N < 2:
        raise ValueError("need at least two columns for a disjoint pair")
    a = int(rng.integers(1, min(K, N - 1) + 1))
    b = int(rng.integers(1, min(K, N - a) + 1))
    idx = rng.choice(N, size=a + b, replace=False)
    return tuple(sorted(int(i) for i in idx[:a])), tuple(sorted(int(j) for j in idx[a:]))


def flat_rip_sampled(matrix: SensingMatrix, K: int, trials: int, seed: int = 0) -> FlatRipReport:
    """Lower bound on the flat-RIP constant from ``trials`` random disjoint pairs.

    Trial ``t`` draws from ``default_rng(seed ^ t)``.
    """
    K, trials, seed = int(K), int(trials), int(seed)
    if K < 1:
        raise ValueError("K must be >= 1")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    tracker = _NearMax()
    for t in range(trials):
        I, J = sample_disjoint_pair(np.random.default_rng(seed ^ t), matrix.N, K)
        tracker.offer(np.array([flat_ratio(matrix, I, J)]), lambda _idx, I=I, J=J: (I, J))
    I_w, J_w = tracker.witness()
    return FlatRipReport(
        K=K,
        theta=tracker.best,
        witness_I=I_w,
        witness_J=J_w,
        mode="sampled",
        trials=trials,
        seed=seed,
        lower_bound_only=True,
        evaluated=trials,
    )


# --- RIP constants ------------------------------------------------------------


@dataclass(frozen=True)
class RipDeltaReport:
    K: int
    delta: float
    support: tuple[int, ...]
    lambda_min: float
    lambda_max: float
    evaluated: int


def rip_delta_exhaustive(
    matrix: SensingMatrix, K: int, budget: int | None = None, batch: int = 8192
) -> RipDeltaReport:
    """Least ``delta`` with (1-delta)|x|^2 <= |Phi x|^2 <= (1+delta)|x|^2 for all K-sparse ``x``.

    Only supports of size exactly ``min(K, N)`` are searched. By eigenvalue
    interlacing no smaller support can deviate further.
    """
    K = int(K)
    if K < 1:
        raise ValueError("K must be >= 1")
    N = matrix.N
    Kc = min(K, N)
    limit = enumeration_budget(budget)
    count = comb(N, Kc)
    if count > limit:
        raise BudgetExceeded(f"RIP enumeration needs {count} supports (budget {limit})")
    G = matrix.gram()
    best, best_support, best_lams = -math.inf, None, (math.nan, math.nan)
    it = combinations(range(N), Kc)
    while True:
        chunk = np.array(list(_take(it, batch)), dtype=np.int64).reshape(-1, Kc)
        if chunk.size == 0:
            break
        sub = G[chunk[:, :, None], chunk[:, None, :]]
        lams = np.linalg.eigvalsh(sub)
        dev = np.maximum(lams[:, -1] - 1.0, 1.0 - lams[:, 0])
        top = float(dev.max())
        # Chunks arrive in lexicographic order, so an earlier near-tie wins.
        if top > best + TIE_TOL:
            idx = argmax_with_ties(dev)
            best = top
            best_support = tuple(int(c) for c in chunk[idx])
            best_lams = (float(lams[idx, 0]), float(lams[idx, -1]))
        elif top > best:
            best = top
    return RipDeltaReport(
        K=K,
        delta=best,
        support=best_support,
        lambda_min=best_lams[0],
        lambda_max=best_lams[1],
        evaluated=count,
    )


def _take(it, n):
    for _ in range(n):
        try:
            yield next(it)
        except StopIteration:
            return


def rip_from_flat(theta: float, K: int) -> float:
    """RIP constant implied by a flat-RIP constant: ``150 * theta * ln K``."""
    K = int(K)
    if K < 2:
        raise ValueError("flat-to-RIP conversion needs K >= 2 (log K > 0)")
    return 150.0 * float(theta) * math.log(K)


# --- character double sums ------------------------------------------------------


def _as_subset(field: PrimeField, S) -> np.ndarray:
    return np.array(sorted({int(s) % field.p for s in S}), dtype=np.int64)


def character_double_sum(field: PrimeField, spec: MultCharSpec, S, T) -> complex:
    """``sum_{s in S, t in T} chi(s - t)``; S and T may overlap (chi(0) = 0)."""
    S, T = _as_subset(field, S), _as_subset(field, T)
    if S.size == 0 or T.size == 0:
        return 0j
    diffs = (S[:, None] - T[None, :]) % field.p
    return csum(spec.table()[diffs])


@dataclass(frozen=True)
class DoubleSumReport:
    p: int
    k: int
    h: int
    size_S: int
    size_T: int
    measured: float
    bound: float
    bound_kind: str
    satisfied: bool
    witness_S: tuple[int, ...] | None = None
    witness_T: tuple[int, ...] | None = None
    mode: str = "sampled"
    evaluated: int = 1
    violations: int = 0
    case: str | None = None
    chain: tuple[dict, ...] = ()
    failed_premise: str | None = None
    asymptotic_caveat: bool = True


PROPERTY_P = "P(alpha,beta)"
SQRT_BOUND = "sqrt_bound"


def admissible_min_size(p: int, alpha: float) -> int:
    """Smallest integer size strictly above ``p**alpha``."""
    return math.floor(p**alpha) + 1


def _sampled_size_schedule(lo: int, hi: int) -> list[int]:
    near = range(lo, min(lo + 3, hi + 1))
    spread = np.unique(np.round(np.geomspace(lo, hi, 5)).astype(int)) if hi > lo else [lo]
    return sorted({*near, *(int(s) for s in spread), hi})


def check_property_p(
    field: PrimeField,
    spec: MultCharSpec,
    alpha: float,
    beta: float,
    trials: int = 200,
    seed: int = 0,
    mode: str = "sampled",
    sizes: tuple[int, int] | None = None,
    budget: int | None = None,
) -> list[DoubleSumReport]:
    """Test ``|sum chi(s-t)| <= p**-beta |S||T|`` for subsets larger than ``p**alpha``.

    Returns one report per size pair ``(|S|, |T|)``, holding the worst pair
    found, how many pairs were evaluated, and how many violated the bound.
    ``sizes`` optionally narrows the admissible size range to ``[lo, hi]``.
    """
    spec.require_nontrivial("the double-sum property")
    p = field.p
    lo = admissible_min_size(p, alpha)
    if lo > p:
        raise ValueError(f"no subset of F_{p} has more than p^alpha = {p**alpha:.6g} elements")
    hi = p
    if sizes is not None:
        lo, hi = max(lo, int(sizes[0])), min(hi, int(sizes[1]))
        if lo > hi:
            raise ValueError(f"requested sizes {sizes} leave no admissible size above p^alpha")
    table = spec.table()
    shift = np.arange(p, dtype=np.int64)

    groups: dict[tuple[int, int], dict] = {}

    def record(a, b, vals, keys):
        bound = p ** (-beta) * a * b
        g = groups.setdefault((a, b), {"tracker": _NearMax(), "n": 0, "viol": 0, "bound": bound})
        g["n"] += vals.size
        g["viol"] += int(np.count_nonzero(vals > bound + CHECK_TOL * a * b))
        g["tracker"].offer(vals, keys)

    if mode == "exhaustive":
        count = sum(comb(p, a) * comb(p, b) for a in range(lo, hi + 1) for b in range(lo, hi + 1))
        limit = enumeration_budget(budget)
        if count > limit:
            raise BudgetExceeded(f"double-sum enumeration needs {count} subset pairs (budget {limit})")
        combos = {b: _combos(p, b) for b in range(lo, hi + 1)}
        for a in range(lo, hi + 1):
            for S in combos[a]:
                # row[t] = sum_{s in S} chi(s - t)
                row = table[(S[:, None] - shift[None, :]) % p].sum(axis=0)
                S_key = tuple(int(s) for s in S)
                for b in range(lo, hi + 1):
                    Ts = combos[b]
                    vals = np.abs(row[Ts].sum(axis=1))
                    record(a, b, vals, lambda i, Ts=Ts, S_key=S_key: (S_key, tuple(int(t) for t in Ts[i])))
    elif mode == "sampled":
        schedule = _sampled_size_schedule(lo, hi)
        for t in range(int(trials)):
            rng = np.random.default_rng(int(seed) ^ t)
            a = schedule[int(rng.integers(len(schedule)))]
            b = schedule[int(rng.integers(len(schedule)))]
            S = tuple(sorted(int(s) for s in rng.choice(p, size=a, replace=False)))
            T = tuple(sorted(int(s) for s in rng.choice(p, size=b, replace=False)))
            val = abs(character_double_sum(field, spec, S, T))
            record(a, b, np.array([val]), lambda _i, S=S, T=T: (S, T))
    else:
        raise ValueError(f"mode must be 'sampled' or 'exhaustive', got {mode!r}")

    reports = []
    for (a, b), g in sorted(groups.items()):
        tracker = g["tracker"]
        S_w, T_w = tracker.witness()
        violated = g["viol"] > 0
        reports.append(
            DoubleSumReport(
                p=p,
                k=spec.k,
                h=spec.h,
                size_S=a,
                size_T=b,
                measured=tracker.best,
                bound=g["bound"],
                bound_kind=PROPERTY_P,
                satisfied=not violated,
                witness_S=S_w if violated else None,
                witness_T=T_w if violated else None,
                mode=mode,
                evaluated=g["n"],
                violations=g["viol"],
            )
        )
    return reports


def _step(name: str, lhs: float, rhs: float, strict: bool = False) -> dict:
    holds = lhs < rhs if strict else lhs <= rhs + CHECK_TOL * max(1.0, abs(rhs))
    return {"step": name, "lhs": lhs, "rhs": rhs, "holds": bool(holds)}


def double_sum_bound_case(p: int, alpha: float, tau: float, size_S: int, size_T: int) -> str:
    if size_S * size_T <= p ** (2 * tau):
        return "1"
    small = min(size_S, size_T)
    return "2.1" if small <= p**alpha else "2.2"


def double_sum_bound_report(
    field: PrimeField, spec: MultCharSpec, alpha: float, tau: float, beta: float, S, T
) -> DoubleSumReport:
    """Evaluate the flat double-sum bound ``p**tau * sqrt(|S||T|)`` on one pair and its case chain."""
    p = field.p
    S, T = tuple(int(s) for s in _as_subset(field, S)), tuple(int(t) for t in _as_subset(field, T))
    # Roles are symmetric in magnitude; put the larger set first.
    if len(T) > len(S):
        S, T = T, S
    a, b = len(S), len(T)
    measured = abs(character_double_sum(field, spec, S, T))
    root = math.sqrt(a * b)
    bound = p**tau * root
    case = double_sum_bound_case(p, alpha, tau, a, b)
    failed = None
    if case == "1":
        chain = (
            _step("trivial: |sum| <= |S||T|", measured, a * b),
            _step("|S||T| <= p^tau sqrt(|S||T|)", a * b, bound),
        )
    elif case == "2.1":
        mid = math.sqrt(p**alpha * p ** (tau + beta)) * root
        chain = (
            _step("trivial: |sum| <= |S||T|", measured, a * b),
            _step("|S||T| <= sqrt(p^alpha p^(tau+beta)) sqrt(|S||T|)", a * b, mid),
            _step("p^((tau+alpha+beta)/2) < p^tau", p ** ((tau + alpha + beta) / 2), p**tau, strict=True),
        )
    else:
        premise = p ** (-beta) * a * b
        chain = (
            _step("premise P(alpha,beta): |sum| <= p^-beta |S||T|", measured, premise),
            _step("p^-beta |S||T| <= p^tau sqrt(|S||T|)", premise, bound),
        )
        if not chain[0]["holds"]:
            failed = PROPERTY_P
    satisfied = measured <= bound + CHECK_TOL * a * b
    violated = not satisfied or not all(s["holds"] for s in chain)
    return DoubleSumReport(
        p=p,
        k=spec.k,
        h=spec.h,
        size_S=a,
        size_T=b,
        measured=measured,
        bound=bound,
        bound_kind=SQRT_BOUND,
        satisfied=satisfied,
        witness_S=S if violated else None,
        witness_T=T if violated else None,
        case=case,
        chain=chain,
        failed_premise=failed,
    )


def verify_double_sum_bound(
    field: PrimeField,
    spec: MultCharSpec,
    alpha: float,
    tau: float,
    beta: float,
    trials: int = 1000,
    seed: int = 0,
) -> list[DoubleSumReport]:
    """Sample subset pairs with sizes at most ``p**(tau+beta)`` and check the flat double-sum bound."""
    spec.require_nontrivial("the flat double-sum bound")
    bad = []
    if not 0 < alpha < 0.5:
        bad.append("0 < alpha < 1/2")
    if not beta > 0:
        bad.append("beta > 0")
    if not alpha + beta < tau:
        bad.append("alpha + beta < tau")
    if not tau < 0.5:
        bad.append("tau < 1/2")
    if bad:
        raise ValueError("hypotheses violated: " + "; ".join(bad))
    p = field.p
    cap = min(p, math.floor(p ** (tau + beta)))
    if cap < 1:
        raise ValueError("p^(tau+beta) < 1 leaves no subsets to test")
    out = []
    for t in range(int(trials)):
        rng = np.random.default_rng(int(seed) ^ t)
        a = int(rng.integers(1, cap + 1))
        b = int(rng.integers(1, cap + 1))
        S = rng.choice(p, size=a, replace=False)
        T = rng.choice(p, size=b, replace=False)
        out.append(double_sum_bound_report(field, spec, alpha, tau, beta, S, T))
    return out


# --- inner-product chain ---------------------------------------------------------


@dataclass(frozen=True)
class ChainReport:
    I: tuple[int, ...]
    J: tuple[int, ...]
    scale: float
    line_a: float
    line_b: float
    line_c: float
    line_d: float
    eq_ab_residual: float
    triangle_slack: float
    eq_cd_residual: float
    holds: bool
    double_sums: tuple[float, ...]
    tau: float | None = None
    flat_premise_holds: bool | None = None
    flat_bound: float | None = None
    flat_bound_holds: bool | None = None


def verify_bound_chain(
    matrix: SensingMatrix, I, J, tau: float | None = None, tol: float = CHECK_TOL
) -> ChainReport:
    """Evaluate the four-line bound on ``|<sum_I phi_i, sum_J phi_j>|`` for disjoint ``I, J``.

    Lines: (a) the inner product itself, (b) its Gauss-sum expansion,
    (c) the triangle-inequality majorant, (d) the same with ``|G| = sqrt(p)``.
    Checks ``a == b``, ``b <= c`` and ``c == d``, each within ``tol * sqrt(|I||J|)``.
    With ``tau`` given it also checks the flat bound
    ``a <= (k-1) p^(tau-1/2) sqrt(|I||J|)``, but only when every per-character
    double sum is at most ``p^tau sqrt(|I||J|)``.
    """
    if matrix.variant is not Variant.POWER_RESIDUE:
        raise ValueError("the Gauss-sum chain applies to the power-residue variant only")
    if matrix.k < 2:
        raise ValueError("the Gauss-sum chain needs k >= 2 (a non-trivial character)")
    I = tuple(sorted({int(i) for i in I}))
    J = tuple(sorted({int(j) for j in J}))
    if not I or not J:
        raise ValueError("I and J must be nonempty")
    if set(I) & set(J):
        raise ValueError(f"I and J overlap: {sorted(set(I) & set(J))}")
    for idx in I + J:
        matrix._index(idx)
    p, k = matrix.p, matrix.k
    fld = build_field(p)
    labels_I = [matrix.column_labels[i] for i in I]
    labels_J = [matrix.column_labels[j] for j in J]
    scale = math.sqrt(len(I) * len(J))

    line_a = flat_ratio(matrix, I, J) * scale
    sums = [character_double_sum(fld, MultCharSpec(fld, k, -h), labels_I, labels_J) for h in range(1, k)]
    gauss = [principal_gauss_sum(fld, k, h) for h in range(1, k)]
    line_b = abs(csum([g * s for g, s in zip(gauss, sums)])) / p
    line_c = math.fsum(abs(g) * abs(s) for g, s in zip(gauss, sums)) / p
    line_d = math.fsum(abs(s) for s in sums) / math.sqrt(p)

    eq_ab = abs(line_a - line_b)
    slack = line_c - line_b
    eq_cd = abs(line_c - line_d)
    holds = eq_ab <= tol * scale and slack >= -tol * scale and eq_cd <= tol * scale

    premise = flat_bound = bound_ok = None
    if tau is not None:
        premise = all(abs(s) <= p**tau * scale + tol * scale for s in sums)
        flat_bound = (k - 1) * p ** (tau - 0.5) * scale
        bound_ok = (line_a <= flat_bound + tol * scale) if premise else None
    return ChainReport(
        I=I,
        J=J,
        scale=scale,
        line_a=line_a,
        line_b=line_b,
        line_c=line_c,
        line_d=line_d,
        eq_ab_residual=eq_ab,
        triangle_slack=slack,
        eq_cd_residual=eq_cd,
        holds=holds,
        double_sums=tuple(abs(s) for s in sums),
        tau=tau,
        flat_premise_holds=premise,
        flat_bound=flat_bound,
        flat_bound_holds=bound_ok,
    )
