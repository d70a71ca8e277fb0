from fractions import Fraction

from hypothesis import assume, given
from hypothesis import strategies as st

from conjlab.conjugacy import (affine_of, apply_word, cycle_value, parity_vector, phi_finite, pseudo_trajectory)
from conjlab.exactnum import AlphaOracle, Ordering, alpha_ceil, alpha_floor, compare_pow, reduce_mod_prime_power
from conjlab.padic import padic_to_rational, phi_2adic, rational_to_padic
from conjlab.words import FiniteWord, WordStream, phi, phi_concat

F = Fraction

words = st.text(alphabet="01", min_size=1, max_size=20)
any_words = st.text(alphabet="01", min_size=0, max_size=20)
odd_rationals = st.builds(lambda n, d: F(n, 2 * d + 1), st.integers(-10 ** 6, 10 ** 6), st.integers(0, 5000))


def h(u):
    return u.count("1")


@given(words)
def test_cycle_fixed_point(u):
    c = cycle_value(u)
    assert apply_word(u, c) == c


@given(words, st.integers(1, 4))
def test_parity_closure(u, k):
    assert str(parity_vector(cycle_value(u), k * len(u))) == u * k


@given(any_words)
def test_zero_annihilation(u):
    assert apply_word(u, phi_finite(u)) == 0


@given(any_words, any_words)
def test_phi_concatenation(u, w):
    assert phi_concat(FiniteWord.parse(u), FiniteWord.parse(w)) == phi(u + w)


@given(any_words, any_words)
def test_composition_of_offsets(u, w):
    tw0, tu0 = apply_word(w, 0), apply_word(u, 0)
    assert affine_of(u + w).offset == tw0 + F(3 ** h(w), 2 ** len(w)) * tu0


@given(any_words, any_words)
def test_suffix_identity(u, r):
    assert phi_finite(u + r) == phi_finite(u) + F(2 ** len(u), 3 ** h(u)) * phi_finite(r)


@given(words)
def test_first_2adic_digit_is_first_letter(u):
    assert phi_2adic(u, len(u)).digits[0] == int(u[0])


@given(words, words)
def test_2adic_isometry_on_truncations(x, y):
    n = max(len(x), len(y))
    x, y = x.ljust(n, "0"), y.ljust(n, "0")
    assume(x != y)
    first = next(i for i in range(n) if x[i] != y[i])
    dx, dy = phi_2adic(x, n).digits, phi_2adic(y, n).digits
    assert next(i for i in range(n) if dx[i] != dy[i]) == first


@given(odd_rationals, st.integers(1, 40), st.integers(1, 40))
def test_inverse_limit_compatibility(q, a, b):
    n, m = min(a, b), max(a, b)
    assert reduce_mod_prime_power(q, 2, m).value % 2 ** n == reduce_mod_prime_power(q, 2, n).value


@given(words)
def test_geometric_closure(u):
    l, hu = len(u), h(u)
    assume(compare_pow(l, hu) is Ordering.Less)
    r = F(2 ** l, 3 ** hu)
    # closed form of the geometric series, and a truncation squeezed against it
    assert phi_finite(u) / (1 - r) == cycle_value(u)
    partial = sum(r ** i * phi_finite(u) for i in range(30))
    assert abs(partial - cycle_value(u)) == abs(cycle_value(u)) * r ** 30


@given(st.integers(0, 300), st.integers(0, 200))
def test_compare_pow_equal_only_at_origin(l, hh):
    assert (compare_pow(l, hh) is Ordering.Equal) == (l == 0 and hh == 0)
    assert compare_pow(l, hh).value == (2 ** l > 3 ** hh) - (2 ** l < 3 ** hh)


@given(st.integers(1, 5000))
def test_log_ratio_floor_and_ceil(l):
    o = AlphaOracle.log_ratio_23()
    c = alpha_ceil(o, l)
    assert alpha_floor(o, l) + 1 == c
    assert F(1, 3) < F(2 ** l, 3 ** c) < 1


@given(odd_rationals)
def test_rational_to_padic_round_trip(q):
    # the preperiod is at most the numerator's bit length and the period is below the denominator
    e = rational_to_padic(q, 2, q.denominator + abs(q.numerator).bit_length() + 4)
    assert padic_to_rational(list(e.digits), 2, e.preperiod, e.period) == q


@given(words, odd_rationals, odd_rationals)
def test_shift_law(u, x, y):
    a = pseudo_trajectory(x, u, len(u))
    b = pseudo_trajectory(x + y, u, len(u))
    for l in range(len(u) + 1):
        assert b[l] == a[l] + F(3 ** h(u[:l]), 2 ** l) * y


@given(words)
def test_pseudo_trajectory_distinct(u):
    assume("1" in u)
    # leading zeros fix 0; from the first 1 on every point is new
    pts = pseudo_trajectory(0, WordStream.periodic(u), 200)[u.index("1"):]
    assert len(set(pts)) == len(pts)


def test_pseudo_trajectory_distinct_long():
    for u in ("1", "10", "100101", "0001"):
        pts = pseudo_trajectory(0, WordStream.periodic(u), 1000)[u.index("1"):]
        assert len(set(pts)) == len(pts)


@given(st.integers(1, 2 ** 16))
def test_phi_not_divisible_by_three(n):
    u = bin(n)[2:]
    assert phi(u) % 3 != 0


@given(any_words, st.integers(0, 8))
def test_phi_two_divisibility(u, k):
    w = "0" * k + "1" + u
    assert phi(w) % 2 ** k == 0 and phi(w) % 2 ** (k + 1) != 0
