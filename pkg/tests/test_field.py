import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from residue_sense.field import (
    build_field,
    divisors,
    factorize,
    integer_root,
    is_prime,
    kth_power_residues,
    primitive_root,
    valid_orders,
)


def trial_division_prime(n):
    return n >= 2 and all(n % d for d in range(2, int(n**0.5) + 1))


def brute_order(g, p):
    x, t = g % p, 1
    while x != 1:
        x, t = x * g % p, t + 1
    return t


@pytest.mark.parametrize("n,expected", [(13, True), (1, False), (561, False), (2, True), (4, False)])
def test_is_prime_examples(n, expected):
    assert is_prime(n) is expected


@given(st.integers(min_value=1, max_value=200_000))
def test_is_prime_matches_trial_division(n):
    assert is_prime(n) == trial_division_prime(n)


def test_is_prime_large_known_values():
    assert is_prime(2**61 - 1)
    assert not is_prime(2**61 + 1)
    assert not is_prime(3215031751)  # strong pseudoprime to bases 2, 3, 5, 7
    with pytest.raises(ValueError):
        is_prime(2**64)


@pytest.mark.parametrize("p,g", [(3, 2), (13, 2), (7, 3)])
def test_primitive_root_examples(p, g):
    assert primitive_root(p) == g


@pytest.mark.parametrize("p", [q for q in range(3, 200) if trial_division_prime(q)])
def test_primitive_root_is_smallest_generator(p):
    g = primitive_root(p)
    assert brute_order(g, p) == p - 1
    assert all(brute_order(c, p) < p - 1 for c in range(2, g))


@pytest.mark.parametrize("bad", [1, 2, 12, 15])
def test_primitive_root_rejects_non_odd_prime(bad):
    with pytest.raises(ValueError):
        primitive_root(bad)


def test_build_field_examples():
    f = build_field(13)
    assert f.g == 2
    assert f.dlog[1] == 0
    assert f.dlog[2] == 1
    assert f.dlog[6] == 5


@pytest.mark.parametrize("p", [3, 5, 13, 31, 101, 997])
def test_field_tables_are_inverse_bijections(p):
    f = build_field(p)
    assert sorted(f.powers.tolist()) == list(range(1, p))
    for t in range(p - 1):
        assert f.dlog[pow(f.g, t, p)] == t


@pytest.mark.parametrize("p", [13, 29, 31])
def test_dlog_is_homomorphism(p):
    f = build_field(p)
    for x in range(1, p):
        for y in range(1, p):
            assert f.dlog[x * y % p] == (f.dlog[x] + f.dlog[y]) % (p - 1)


def test_build_field_rejects_composite():
    with pytest.raises(ValueError, match="not prime"):
        build_field(12)


@pytest.mark.parametrize(
    "p,k,expected",
    [(13, 1, tuple(range(1, 13))), (13, 3, (1, 5, 8, 12)), (5, 2, (1, 4))],
)
def test_kth_power_residue_examples(p, k, expected):
    assert kth_power_residues(build_field(p), k).elements == expected


@pytest.mark.parametrize("p", [3, 5, 7, 13, 29, 31, 37, 101])
def test_residues_match_enumeration(p):
    f = build_field(p)
    for k in divisors(p - 1):
        res = kth_power_residues(f, k)
        assert set(res.elements) == {pow(x, k, p) for x in range(1, p)}
        assert set(res.elements) == {pow(f.g, k * t, p) for t in range((p - 1) // k)}
        assert len(res) * k == p - 1
        assert list(res.elements) == sorted(res.elements)


@pytest.mark.parametrize("p", [5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43])
def test_minus_one_is_square_iff_p_1_mod_4(p):
    squares = kth_power_residues(build_field(p), 2)
    assert ((p - 1) in squares) == (p % 4 == 1)


def test_kth_power_residues_rejects_non_divisor():
    with pytest.raises(ValueError):
        kth_power_residues(build_field(13), 5)


@pytest.mark.parametrize("n,expected", [(12, [1, 2, 3, 4, 6, 12]), (1, [1]), (30, [1, 2, 3, 5, 6, 10, 15, 30])])
def test_divisors_examples(n, expected):
    assert divisors(n) == expected


@given(st.integers(min_value=1, max_value=50_000))
def test_divisors_match_brute_force(n):
    assert divisors(n) == [d for d in range(1, n + 1) if n % d == 0]


@given(st.integers(min_value=1, max_value=10**12))
@settings(max_examples=50)
def test_factorize_reconstructs(n):
    prod = 1
    for q, e in factorize(n).items():
        assert trial_division_prime(q) if q < 10**6 else is_prime(q)
        prod *= q**e
    assert prod == n


def test_valid_orders():
    assert valid_orders(13) == [2, 3, 4, 6]
    assert valid_orders(3) == []


@given(st.integers(min_value=0, max_value=10**30), st.integers(min_value=1, max_value=12))
def test_integer_root_is_floor(n, r):
    x = integer_root(n, r)
    assert x**r <= n < (x + 1) ** r
