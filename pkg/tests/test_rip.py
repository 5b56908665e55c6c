import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from residue_sense.characters import MultCharSpec
from residue_sense.field import build_field, valid_orders
from residue_sense.matrix import build_matrix, build_paley_matrix, coherence
from residue_sense.reporting import BUDGET_ENV, BudgetExceeded, enumeration_budget
from residue_sense.rip import (
    AnalysisParams,
    admissible_min_size,
    base_conditions,
    character_double_sum,
    check_property_p,
    flat_ratio,
    flat_rip_exhaustive,
    flat_rip_pair_count,
    flat_rip_sampled,
    double_sum_bound_case,
    double_sum_bound_report,
    rip_delta_exhaustive,
    rip_from_flat,
    tau_interval,
    validate_params,
    verify_bound_chain,
    verify_double_sum_bound,
)


@pytest.fixture(scope="module")
def m13_3():
    return build_matrix(build_field(13), 3)


def legendre(a, p):
    a %= p
    return 0 if a == 0 else (1 if pow(a, (p - 1) // 2, p) == 1 else -1)


# --- parameters -----------------------------------------------------------------


def test_validate_params_accepts_example():
    chk = validate_params(AnalysisParams(alpha=0.1, beta0=0.15, eps1=0.0, eps2=0.05, tau=0.44))
    assert chk.ok, chk.diagnostics
    assert chk.gamma == pytest.approx(0.59)
    assert chk.tau_interval == pytest.approx((0.35, 0.45))


def test_validate_params_rejects_condition_2():
    chk = validate_params(AnalysisParams(alpha=0.2, beta0=0.2, eps1=0.0, eps2=0.05, tau=0.44))
    assert not chk.ok
    assert "condition 2: alpha + 2*beta0 < 1/2" in chk.diagnostics


def test_validate_params_rejects_eps_order():
    chk = validate_params(AnalysisParams(alpha=0.1, beta0=0.15, eps1=0.1, eps2=0.05, tau=0.44))
    assert "condition 3: eps1 < eps2" in chk.diagnostics


def test_validate_params_tau_window_named():
    chk = validate_params(AnalysisParams(alpha=0.1, beta0=0.15, eps1=0.0, eps2=0.05, tau=0.46))
    assert chk.diagnostics == ("tau window: tau < 1/2 - eps2",)


def test_validate_params_condition_4():
    params = AnalysisParams(alpha=0.1, beta0=0.15, eps1=0.0, eps2=0.05, tau=0.44)
    # 101^0.05 ~ 1.26, so k = 2 would need k <= 1.26: fails
    chk = validate_params(params, p=101, k=2)
    assert "condition 4: k <= p^eps2" in chk.diagnostics
    big = AnalysisParams(alpha=0.1, beta0=0.15, eps1=0.0, eps2=0.14, tau=0.355)
    assert validate_params(big, p=10009, k=2).ok


def test_tau_window_nonempty_on_grid():
    grid = np.linspace(0.0, 0.5, 12)[1:-1]
    checked = 0
    for a, b0, e1, e2 in itertools.product(grid, grid, np.linspace(0, 0.45, 10), np.linspace(0.01, 0.45, 10)):
        if base_conditions(a, b0, e1, e2):
            continue
        lo, hi = tau_interval(a, b0, e1, e2)
        assert hi > lo
        checked += 1
    assert checked > 0


@given(
    st.floats(0.001, 0.499),
    st.floats(0.001, 0.25),
    st.floats(0.0, 0.25),
    st.floats(0.0, 0.25),
)
def test_tau_window_nonempty_property(a, b0, e1, e2):
    if base_conditions(a, b0, e1, e2):
        return
    lo, hi = tau_interval(a, b0, e1, e2)
    assert hi > lo
    tau = (lo + hi) / 2
    chk = validate_params(AnalysisParams(a, b0, e1, e2, tau))
    assert chk.ok
    assert chk.gamma > 0.5


# --- flat RIP ---------------------------------------------------------------------


def test_pair_count():
    # ordered disjoint pairs of sizes 1..2 from 13 columns
    assert flat_rip_pair_count(13, 2) == 13 * 12 + 13 * 66 + 78 * 11 + 78 * 55


@pytest.mark.parametrize("p", [13, 29])
def test_flat_k1_is_coherence(p):
    f = build_field(p)
    for k in valid_orders(p):
        m = build_matrix(f, k)
        assert flat_rip_exhaustive(m, 1).theta == pytest.approx(coherence(m)[0], abs=1e-9)
    paley = build_paley_matrix(f)
    assert flat_rip_exhaustive(paley, 1).theta == pytest.approx(coherence(paley)[0], abs=1e-9)


def test_flat_k2_frozen_value(m13_3):
    rep = flat_rip_exhaustive(m13_3, 2)
    # frozen from a pure-Python enumeration of all disjoint pairs of <=2-subsets
    assert rep.theta == pytest.approx(1.0697354195094655, abs=1e-12)
    assert (rep.witness_I, rep.witness_J) == ((0, 2), (6, 9))
    assert rep.mode == "exhaustive" and not rep.lower_bound_only
    assert flat_ratio(m13_3, rep.witness_I, rep.witness_J) == pytest.approx(rep.theta, abs=1e-9)


def test_flat_bound_holds_for_every_pair(m13_3):
    theta = flat_rip_exhaustive(m13_3, 2).theta
    subsets = [s for r in (1, 2) for s in itertools.combinations(range(13), r)]
    for I in subsets:
        for J in subsets:
            if set(I) & set(J):
                continue
            assert flat_ratio(m13_3, I, J) <= theta + 1e-9


def test_flat_budget(m13_3, monkeypatch):
    with pytest.raises(BudgetExceeded, match="sampled"):
        flat_rip_exhaustive(m13_3, 2, budget=100)
    monkeypatch.setenv(BUDGET_ENV, "100")
    assert enumeration_budget() == 100
    with pytest.raises(BudgetExceeded):
        flat_rip_exhaustive(m13_3, 2)
    monkeypatch.setenv(BUDGET_ENV, "nope")
    with pytest.raises(ValueError):
        enumeration_budget()


def test_flat_sampled_examples(m13_3):
    one = flat_rip_sampled(m13_3, 2, trials=1, seed=11)
    assert one.theta == pytest.approx(flat_ratio(m13_3, one.witness_I, one.witness_J), abs=1e-15)
    a = flat_rip_sampled(m13_3, 2, trials=300, seed=5)
    b = flat_rip_sampled(m13_3, 2, trials=300, seed=5)
    assert a == b
    assert a.lower_bound_only and a.mode == "sampled" and a.seed == 5 and a.trials == 300
    assert a.theta <= flat_rip_exhaustive(m13_3, 2).theta + 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 50))
def test_sampled_never_exceeds_exhaustive(seed, trials):
    m = build_matrix(build_field(13), 4)
    exact = _flat_exact(4, 2)
    rep = flat_rip_sampled(m, 2, trials=trials, seed=seed)
    assert rep.theta <= exact + 1e-12
    assert not set(rep.witness_I) & set(rep.witness_J)
    assert 1 <= len(rep.witness_I) <= 2 and 1 <= len(rep.witness_J) <= 2


_FLAT_CACHE = {}


def _flat_exact(k, K):
    if (k, K) not in _FLAT_CACHE:
        _FLAT_CACHE[(k, K)] = flat_rip_exhaustive(build_matrix(build_field(13), k), K).theta
    return _FLAT_CACHE[(k, K)]


# --- RIP constants -------------------------------------------------------------------


def svd_delta(entries, K):
    """Independent route: squared singular values of every K-column submatrix."""
    N = entries.shape[1]
    best = 0.0
    for S in itertools.combinations(range(N), K):
        s = np.linalg.svd(entries[:, list(S)], compute_uv=False)
        lam = s**2
        lam_min = lam.min() if len(lam) == K else 0.0
        best = max(best, lam.max() - 1, 1 - lam_min)
    return best


def test_rip_delta_k1_is_zero(m13_3):
    assert rip_delta_exhaustive(m13_3, 1).delta < 1e-12


@pytest.mark.parametrize("p", [13, 29])
def test_rip_delta_k2_is_coherence(p):
    f = build_field(p)
    for k in valid_orders(p):
        m = build_matrix(f, k)
        assert rip_delta_exhaustive(m, 2).delta == pytest.approx(coherence(m)[0], abs=1e-9)


def test_rip_delta_matches_svd_oracle(m13_3):
    for K in (2, 3):
        assert rip_delta_exhaustive(m13_3, K).delta == pytest.approx(svd_delta(m13_3.entries, K), abs=1e-9)


def test_rip_delta_monotone_and_gershgorin():
    m = build_matrix(build_field(13), 4)
    mu = coherence(m)[0]
    deltas = [rip_delta_exhaustive(m, K).delta for K in range(1, 5)]
    assert all(a <= b + 1e-12 for a, b in zip(deltas, deltas[1:]))
    for K, d in enumerate(deltas, start=1):
        assert d <= (K - 1) * mu + 1e-9


def test_rip_delta_witness_reproduces(m13_3):
    rep = rip_delta_exhaustive(m13_3, 3)
    sub = m13_3.entries[:, list(rep.support)]
    lam = np.linalg.eigvalsh(sub.conj().T @ sub)
    assert max(lam[-1] - 1, 1 - lam[0]) == pytest.approx(rep.delta, abs=1e-12)


def test_rip_delta_budget(m13_3):
    with pytest.raises(BudgetExceeded):
        rip_delta_exhaustive(m13_3, 4, budget=10)


def test_rip_from_flat_examples():
    assert rip_from_flat(0.001, 10) == pytest.approx(0.345388, abs=1e-6)
    assert rip_from_flat(0.0, 7) == 0
    assert rip_from_flat(0.01, 2) == pytest.approx(1.039721, abs=1e-6)
    with pytest.raises(ValueError):
        rip_from_flat(0.1, 1)


# --- double sums --------------------------------------------------------------------


def test_double_sum_examples():
    f = build_field(13)
    for k in valid_orders(13):
        spec = MultCharSpec(f, k, 1)
        assert abs(character_double_sum(f, spec, [2], [5])) == pytest.approx(1, abs=1e-12)
        assert character_double_sum(f, spec, [4], [4]) == 0
        assert abs(character_double_sum(f, spec, range(13), range(13))) < 1e-9


def test_double_sum_matches_legendre_oracle():
    p = 31
    f = build_field(p)
    rng = np.random.default_rng(0)
    for _ in range(20):
        S = rng.choice(p, 7, replace=False)
        T = rng.choice(p, 9, replace=False)
        oracle = sum(legendre(int(s) - int(t), p) for s in S for t in T)
        assert character_double_sum(f, MultCharSpec(f, 2, 1), S, T) == pytest.approx(oracle, abs=1e-9)


def test_property_p_size_threshold():
    f = build_field(13)
    spec = MultCharSpec(f, 2, 1)
    assert admissible_min_size(13, 0.9) == 11
    reps = check_property_p(f, spec, 0.9, 0.05, mode="exhaustive")
    assert sorted({(r.size_S, r.size_T) for r in reps}) == [(a, b) for a in (11, 12, 13) for b in (11, 12, 13)]
    only_full = check_property_p(f, spec, 0.97, 0.05, mode="exhaustive")
    assert [(r.size_S, r.size_T) for r in only_full] == [(13, 13)]
    assert only_full[0].measured < 1e-9 and only_full[0].satisfied
    assert only_full[0].asymptotic_caveat
    with pytest.raises(ValueError):
        check_property_p(f, spec, 1.0, 0.05)


def test_property_p_exhaustive_frozen():
    f = build_field(13)
    reps = check_property_p(f, MultCharSpec(f, 2, 1), 0.5, 0.05, mode="exhaustive", sizes=(4, 6))
    # frozen from a pure-Python Legendre-symbol enumeration of all subset pairs
    expected = {(4, 4): 9, (4, 5): 9, (4, 6): 10, (5, 4): 9, (5, 5): 10, (5, 6): 10, (6, 4): 10, (6, 5): 10, (6, 6): 10}
    assert {(r.size_S, r.size_T): round(r.measured, 9) for r in reps} == expected
    assert all(r.satisfied and r.violations == 0 and r.witness_S is None for r in reps)
    assert reps[0].evaluated == math.comb(13, 4) ** 2


def test_property_p_reports_violations_with_witnesses():
    f = build_field(13)
    # beta large enough that the bound drops below the attained maximum
    reps = check_property_p(f, MultCharSpec(f, 2, 1), 0.5, 0.5, mode="exhaustive", sizes=(4, 4))
    (rep,) = reps
    assert not rep.satisfied and rep.violations > 0
    assert rep.measured == pytest.approx(
        abs(character_double_sum(f, MultCharSpec(f, 2, 1), rep.witness_S, rep.witness_T)), abs=1e-9
    )


def test_property_p_beta_zero_always_holds():
    f = build_field(29)
    for k in valid_orders(29):
        reps = check_property_p(f, MultCharSpec(f, k, 1), 0.3, 0.0, trials=100, seed=3)
        assert all(r.satisfied for r in reps)


def test_property_p_sampled_deterministic_and_budget():
    f = build_field(31)
    spec = MultCharSpec(f, 3, 1)
    a = check_property_p(f, spec, 0.4, 0.05, trials=150, seed=9)
    b = check_property_p(f, spec, 0.4, 0.05, trials=150, seed=9)
    assert a == b
    assert sum(r.evaluated for r in a) == 150
    with pytest.raises(BudgetExceeded):
        check_property_p(f, spec, 0.4, 0.05, mode="exhaustive", budget=1000)


def test_property_p_rejects_trivial_character():
    f = build_field(13)
    with pytest.raises(ValueError, match="non-trivial"):
        check_property_p(f, MultCharSpec(f, 3, 0), 0.5, 0.1)


# --- flat double-sum bound and its proof cases -----------------------------------------


def test_double_sum_bound_case_labels():
    assert double_sum_bound_case(101, 0.3, 0.45, 2, 3) == "1"
    assert double_sum_bound_case(101, 0.3, 0.45, 9, 3) == "1"
    assert double_sum_bound_case(101, 0.3, 0.45, 30, 3) == "2.1"
    assert double_sum_bound_case(101, 0.3, 0.45, 9, 8) == "2.2"


def test_case_2_1_is_unreachable_within_size_cap():
    # |S| <= p^(tau+beta), |T| <= p^alpha and alpha+beta < tau force |S||T| < p^(2 tau)
    p, alpha, tau, beta = 101, 0.3, 0.45, 0.04
    cap = math.floor(p ** (tau + beta))
    assert all(double_sum_bound_case(p, alpha, tau, a, b) != "2.1" for a in range(1, cap + 1) for b in range(1, cap + 1))


def test_case_2_1_chain_outside_cap():
    f = build_field(101)
    rep = double_sum_bound_report(f, MultCharSpec(f, 2, 1), 0.3, 0.45, 0.04, range(30), [50, 60, 70])
    assert rep.case == "2.1" and len(rep.chain) == 3


def test_sqrt_bound_small_cases():
    f = build_field(101)
    spec = MultCharSpec(f, 2, 1)
    single = double_sum_bound_report(f, spec, 0.3, 0.45, 0.04, [3], [10])
    assert single.case == "1" and single.satisfied
    assert single.measured == pytest.approx(1) and single.bound == pytest.approx(101**0.45)
    assert all(step["holds"] for step in single.chain)


def test_sqrt_bound_seeded_run():
    f = build_field(101)
    spec = MultCharSpec(f, 2, 1)
    reps = verify_double_sum_bound(f, spec, alpha=0.3, tau=0.45, beta=0.04, trials=1000, seed=0)
    assert len(reps) == 1000
    cap = math.floor(101**0.49)
    cases = {r.case for r in reps}
    assert cases == {"1", "2.2"}
    for r in reps:
        assert r.size_S <= cap and r.size_T <= cap and r.size_S >= r.size_T
        if r.case in ("1", "2.1"):
            # these cases use only the trivial bound, so they cannot fail
            assert r.satisfied and all(s["holds"] for s in r.chain)
        if not r.satisfied:
            assert r.case == "2.2" and r.failed_premise == "P(alpha,beta)"
            assert r.witness_S is not None
    assert reps == verify_double_sum_bound(f, spec, alpha=0.3, tau=0.45, beta=0.04, trials=1000, seed=0)


def test_sqrt_bound_hypotheses_named():
    f = build_field(101)
    with pytest.raises(ValueError, match="alpha \\+ beta < tau"):
        verify_double_sum_bound(f, MultCharSpec(f, 2, 1), alpha=0.3, tau=0.3, beta=0.04)


# --- inner-product chain --------------------------------------------------------------


def test_chain_singletons_equal_inner_product(m13_3):
    rep = verify_bound_chain(m13_3, [0], [5])
    assert rep.holds
    assert rep.line_a == pytest.approx(abs(np.vdot(m13_3.entries[:, 5], m13_3.entries[:, 0])), abs=1e-12)
    assert rep.eq_ab_residual < 1e-9


def test_chain_example(m13_3):
    rep = verify_bound_chain(m13_3, [0, 1], [2, 3])
    assert rep.holds
    assert rep.triangle_slack >= -1e-9
    assert rep.eq_ab_residual < 1e-9 * rep.scale and rep.eq_cd_residual < 1e-9 * rep.scale


def test_chain_slack_can_be_strict():
    m = build_matrix(build_field(13), 4)
    slacks = []
    rng = np.random.default_rng(1)
    for _ in range(50):
        idx = rng.choice(13, 6, replace=False)
        slacks.append(verify_bound_chain(m, idx[:3], idx[3:]).triangle_slack)
    assert min(slacks) >= -1e-9
    assert max(slacks) > 1e-3


def test_chain_flat_bound_conditional(m13_3):
    rep = verify_bound_chain(m13_3, [0, 1], [2, 3], tau=0.45)
    assert rep.flat_premise_holds is not None
    if rep.flat_premise_holds:
        assert rep.flat_bound_holds
    else:
        assert rep.flat_bound_holds is None


def test_chain_rejects_bad_input(m13_3):
    with pytest.raises(ValueError, match="overlap"):
        verify_bound_chain(m13_3, [0, 1], [1, 2])
    with pytest.raises(ValueError):
        verify_bound_chain(m13_3, [], [1])
    with pytest.raises(ValueError, match="power-residue"):
        verify_bound_chain(build_paley_matrix(build_field(13)), [0], [1])
